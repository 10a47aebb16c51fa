#include "kanforge/spline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "kanforge/kernels.hpp"

namespace kanforge {

namespace {

constexpr int kMaxDegree = 15;

std::atomic<std::uint64_t> g_out_of_domain{0};

void check_grid(double a, double b, int G) {
  if (G < 2) throw std::invalid_argument("spline grid needs G >= 2 points, got " + std::to_string(G));
  if (!(a < b)) throw std::invalid_argument("spline domain needs a < b");
}

bool is_uniform(const std::vector<double>& breaks) {
  const auto ref = uniform_knots(breaks.front(), breaks.back(), static_cast<int>(breaks.size()));
  return ref == breaks;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::vector<double> uniform_knots(double a, double b, int G) {
  check_grid(a, b, G);
  std::vector<double> x(G);
  const double h = (b - a) / (G - 1);
  for (int r = 0; r < G; ++r) x[r] = a + r * h;
  x.back() = b;
  return x;
}

Spline::Spline(int degree, std::vector<double> breaks, std::vector<double> coefficients)
    : degree_(degree), breaks_(std::move(breaks)), coefs_(std::move(coefficients)) {
  if (degree_ < 0 || degree_ > kMaxDegree) {
    throw std::invalid_argument("spline degree must be in [0, " + std::to_string(kMaxDegree) + "]");
  }
  if (breaks_.size() < 2) throw std::invalid_argument("spline needs at least 2 grid points");
  for (std::size_t r = 0; r < breaks_.size(); ++r) {
    if (!std::isfinite(breaks_[r])) throw std::invalid_argument("non-finite spline breakpoint");
    if (r > 0 && !(breaks_[r - 1] < breaks_[r])) {
      throw std::invalid_argument("spline breakpoints must be strictly increasing");
    }
  }
  const std::size_t expected = breaks_.size() + degree_ - 1;
  if (coefs_.size() != expected) {
    throw std::invalid_argument("spline of degree " + std::to_string(degree_) + " on " +
                                std::to_string(breaks_.size()) + " grid points needs " +
                                std::to_string(expected) + " coefficients, got " +
                                std::to_string(coefs_.size()));
  }
  for (double c : coefs_) {
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite spline coefficient");
  }
  uniform_ = is_uniform(breaks_);
  inv_h_ = (breaks_.size() - 1) / (breaks_.back() - breaks_.front());
  if (degree_ >= 1) {
    const std::size_t m = coefs_.size();
    slope_lo_ = degree_ * (coefs_[1] - coefs_[0]) / (breaks_[1] - breaks_[0]);
    slope_hi_ = degree_ * (coefs_[m - 1] - coefs_[m - 2]) /
                (breaks_[breaks_.size() - 1] - breaks_[breaks_.size() - 2]);
  }
}

Spline Spline::linear(const Interval& domain, double slope, double offset) {
  if (domain.degenerate()) throw std::invalid_argument("linear spline on a degenerate domain");
  return Spline(1, {domain.lo, domain.hi}, {slope * domain.lo + offset, slope * domain.hi + offset});
}

double Spline::knot(int i) const {
  const int G = static_cast<int>(breaks_.size());
  return breaks_[std::clamp(i - degree_, 0, G - 1)];
}

int Spline::span_of(double t) const {
  const int last = static_cast<int>(breaks_.size()) - 2;
  if (!uniform_) {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
    return std::clamp(static_cast<int>(it - breaks_.begin()) - 1, 0, last);
  }
  int r = static_cast<int>((t - breaks_.front()) * inv_h_);
  r = std::clamp(r, 0, last);
  while (r > 0 && t < breaks_[r]) --r;
  while (r < last && t >= breaks_[r + 1]) ++r;
  return r;
}

double Spline::de_boor(int r, double t) const {
  const int k = degree_;
  if (k == 1) {
    const double alpha = (t - breaks_[r]) / (breaks_[r + 1] - breaks_[r]);
    return (1.0 - alpha) * coefs_[r] + alpha * coefs_[r + 1];
  }
  std::array<double, kMaxDegree + 1> d{};
  for (int j = 0; j <= k; ++j) d[j] = coefs_[r + j];
  for (int s = 1; s <= k; ++s) {
    for (int j = k; j >= s; --j) {
      const int i = r + j;
      const double left = knot(i);
      const double alpha = (t - left) / (knot(i + k + 1 - s) - left);
      d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
    }
  }
  return d[k];
}

double Spline::operator()(double t) const {
  const double a = breaks_.front();
  const double b = breaks_.back();
  if (t < a || t > b) {
    g_out_of_domain.fetch_add(1, std::memory_order_relaxed);
    if (t < a) return coefs_.front() + slope_lo_ * (t - a);
    return coefs_.back() + slope_hi_ * (t - b);
  }
  return de_boor(span_of(t), t);
}

Spline Spline::derivative() const {
  if (degree_ == 0) throw std::logic_error("derivative of a degree-0 spline");
  const int k = degree_;
  std::vector<double> d(coefs_.size() - 1);
  for (std::size_t i = 0; i + 1 < coefs_.size(); ++i) {
    const int ii = static_cast<int>(i);
    d[i] = k * (coefs_[i + 1] - coefs_[i]) / (knot(ii + k + 1) - knot(ii + 1));
  }
  return Spline(k - 1, breaks_, std::move(d));
}

double Spline::derivative_at(double t) const {
  if (degree_ == 0) return 0.0;
  if (t < breaks_.front()) return slope_lo_;
  if (t > breaks_.back()) return slope_hi_;
  return derivative()(t);
}

int Spline::basis(double t, std::span<double> values) const {
  const int k = degree_;
  if (static_cast<int>(values.size()) < k + 1) throw std::invalid_argument("basis: output too small");
  t = std::clamp(t, breaks_.front(), breaks_.back());
  const int r = span_of(t);
  const int mu = r + k;
  std::array<double, kMaxDegree + 1> left{}, right{};
  values[0] = 1.0;
  for (int j = 1; j <= k; ++j) {
    left[j] = t - knot(mu + 1 - j);
    right[j] = knot(mu + j) - t;
    double saved = 0.0;
    for (int q = 0; q < j; ++q) {
      const double temp = values[q] / (right[q + 1] + left[j - q]);
      values[q] = saved + right[q + 1] * temp;
      saved = left[j - q] * temp;
    }
    values[j] = saved;
  }
  return r;
}

Spline Spline::scaled(double factor) const {
  std::vector<double> c = coefs_;
  for (double& v : c) v *= factor;
  return Spline(degree_, breaks_, std::move(c));
}

Spline pl_interpolant(const std::function<double(double)>& f, double a, double b, int G) {
  auto x = uniform_knots(a, b, G);
  std::vector<double> v(x.size());
  for (std::size_t r = 0; r < x.size(); ++r) {
    v[r] = f(x[r]);
    if (!std::isfinite(v[r])) {
      throw std::invalid_argument("pl_interpolant: non-finite sample at t = " + std::to_string(x[r]));
    }
  }
  return Spline(1, std::move(x), std::move(v));
}

Spline piecewise_linear(std::vector<double> breaks, std::vector<double> values) {
  if (breaks.size() != values.size()) throw std::invalid_argument("piecewise_linear: size mismatch");
  return Spline(1, std::move(breaks), std::move(values));
}

Spline exact_poly_spline(std::span<const double> poly, double a, double b, int k, int G) {
  std::size_t d = poly.size();
  while (d > 0 && poly[d - 1] == 0.0) --d;
  const int degree = d == 0 ? 0 : static_cast<int>(d) - 1;
  if (degree > k) {
    throw std::invalid_argument("exact_poly_spline: polynomial degree " + std::to_string(degree) +
                                " exceeds spline degree " + std::to_string(k));
  }
  if (k < 1) throw std::invalid_argument("exact_poly_spline: spline degree must be >= 1");
  check_grid(a, b, G);
  // Zero-coefficient scaffold to get at the clamped knot vector.
  const Spline shape(k, uniform_knots(a, b, G), std::vector<double>(G + k - 1, 0.0));
  const auto& br = shape.breaks();
  const auto knot = [&](int i) { return br[std::clamp(i - k, 0, G - 1)]; };

  std::vector<double> c(G + k - 1);
  std::array<double, kMaxDegree + 1> e{};
  for (int i = 0; i < G + k - 1; ++i) {
    // Elementary symmetric polynomials of the k knots t_{i+1} .. t_{i+k}.
    e.fill(0.0);
    e[0] = 1.0;
    for (int q = 1; q <= k; ++q) {
      const double u = knot(i + q);
      for (int j = q; j >= 1; --j) e[j] += e[j - 1] * u;
    }
    double blossom = 0.0;
    for (int j = 0; j <= degree; ++j) blossom += poly[j] * (e[j] / binomial(k, j));
    c[i] = blossom;
  }
  return Spline(k, shape.breaks(), std::move(c));
}

Spline cubic_interpolant(const std::function<double(double)>& f, double a, double b, int G) {
  if (G < 4) throw std::invalid_argument("cubic_interpolant: not-a-knot conditions need G >= 4");
  const auto x = uniform_knots(a, b, G);
  const int m = G + 2;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  const Spline shape(3, x, std::vector<double>(m, 0.0));
  std::array<double, 4> nb{};
  for (int r = 0; r < G; ++r) {
    const int first = shape.basis(x[r], nb);
    for (int j = 0; j <= 3; ++j) A(r, first + j) = nb[j];
    rhs(r) = f(x[r]);
  }
  // Third-derivative continuity across x_1 and x_{G-2}.
  for (int i = 0; i < m; ++i) {
    std::vector<double> unit(m, 0.0);
    unit[i] = 1.0;
    const Spline d3 = Spline(3, x, unit).derivative().derivative().derivative();
    const auto& c = d3.coefficients();  // one value per span
    A(G, i) = c[1] - c[0];
    A(G + 1, i) = c[G - 2] - c[G - 3];
  }
  const Eigen::VectorXd coef = A.fullPivLu().solve(rhs);
  return Spline(3, x, std::vector<double>(coef.data(), coef.data() + m));
}

Spline lsq_fit(const std::function<double(double)>& f, double a, double b, int k, int G, int samples) {
  check_grid(a, b, G);
  const int m = G + k - 1;
  if (samples < m) throw std::invalid_argument("lsq_fit: need at least as many samples as coefficients");
  const Spline shape(k, uniform_knots(a, b, G), std::vector<double>(m, 0.0));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(samples, m);
  Eigen::VectorXd y(samples);
  std::array<double, kMaxDegree + 1> nb{};
  for (int s = 0; s < samples; ++s) {
    const double t = s + 1 == samples ? b : a + (b - a) * s / (samples - 1);
    const int first = shape.basis(t, nb);
    for (int j = 0; j <= k; ++j) A(s, first + j) = nb[j];
    y(s) = f(t);
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
  return Spline(k, shape.breaks(), std::vector<double>(coef.data(), coef.data() + m));
}

LipValue spline_lipschitz(const Spline& s) {
  const auto& c = s.coefficients();
  const auto& br = s.breaks();
  switch (s.degree()) {
    case 0: {
      const bool constant = std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); });
      return {constant ? 0.0 : std::numeric_limits<double>::infinity(), true};
    }
    case 1: {
      double lip = 0.0;
      for (std::size_t r = 0; r + 1 < c.size(); ++r) {
        lip = std::max(lip, std::fabs((c[r + 1] - c[r]) / (br[r + 1] - br[r])));
      }
      return {lip, true};
    }
    case 2: {
      // s' is piecewise linear and its coefficients are its values at the breakpoints.
      const Spline d1 = s.derivative();
      double lip = 0.0;
      for (double v : d1.coefficients()) lip = std::max(lip, std::fabs(v));
      return {lip, true};
    }
    case 3: {
      // s' is piecewise quadratic: check breakpoints and the root of s'' in each span.
      const Spline d1 = s.derivative();
      const Spline d2 = d1.derivative();
      const auto& e = d2.coefficients();
      double lip = 0.0;
      for (double t : br) lip = std::max(lip, std::fabs(d1(t)));
      for (std::size_t r = 0; r + 1 < br.size(); ++r) {
        if ((e[r] < 0.0 && e[r + 1] > 0.0) || (e[r] > 0.0 && e[r + 1] < 0.0)) {
          const double tau = br[r] + (br[r + 1] - br[r]) * e[r] / (e[r] - e[r + 1]);
          lip = std::max(lip, std::fabs(d1(tau)));
        }
      }
      return {lip, true};
    }
    default: {
      const Spline d1 = s.derivative();
      double lip = 0.0;
      constexpr int kPerSpan = 256;
      for (std::size_t r = 0; r + 1 < br.size(); ++r) {
        for (int q = 0; q <= kPerSpan; ++q) {
          const double t = q == kPerSpan ? br[r + 1] : br[r] + (br[r + 1] - br[r]) * q / kPerSpan;
          lip = std::max(lip, std::fabs(d1(t)));
        }
      }
      return {lip, false};
    }
  }
}

double sup_error(const std::function<double(double)>& f, const Spline& s, std::size_t samples) {
  if (samples < 2) throw std::invalid_argument("sup_error: samples must be >= 2");
  return kernels::spline_sup_error(f, s, samples);
}

std::uint64_t out_of_domain_hits() { return g_out_of_domain.load(std::memory_order_relaxed); }
void reset_out_of_domain_hits() { g_out_of_domain.store(0, std::memory_order_relaxed); }

Json spline_to_json(const Spline& s) {
  Json j;
  j["order"] = s.degree();
  j["domain"] = {s.domain().lo, s.domain().hi};
  j["grid_points"] = s.grid_points();
  j["coefficients"] = s.coefficients();
  if (!s.uniform()) j["knots"] = s.breaks();
  return j;
}

Spline spline_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("spline must be an object");
  for (const char* key : {"order", "domain", "grid_points", "coefficients"}) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("spline is missing '") + key + "'");
  }
  if (!j["order"].is_number_integer()) throw std::invalid_argument("spline 'order' must be an integer");
  if (!j["grid_points"].is_number_integer()) {
    throw std::invalid_argument("spline 'grid_points' must be an integer");
  }
  const auto& dom = j["domain"];
  if (!dom.is_array() || dom.size() != 2 || !dom[0].is_number() || !dom[1].is_number()) {
    throw std::invalid_argument("spline 'domain' must be [a, b]");
  }
  const int G = j["grid_points"].get<int>();
  const double a = dom[0].get<double>();
  const double b = dom[1].get<double>();
  std::vector<double> breaks;
  if (j.contains("knots")) {
    breaks = j["knots"].get<std::vector<double>>();
    if (static_cast<int>(breaks.size()) != G) throw std::invalid_argument("spline 'knots' must hold G values");
    if (breaks.front() != a || breaks.back() != b) {
      throw std::invalid_argument("spline 'knots' must start at a and end at b");
    }
  } else {
    breaks = uniform_knots(a, b, G);
  }
  if (!j["coefficients"].is_array()) throw std::invalid_argument("spline 'coefficients' must be an array");
  return Spline(j["order"].get<int>(), std::move(breaks), j["coefficients"].get<std::vector<double>>());
}

}  // namespace kanforge
