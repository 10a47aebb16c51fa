#include <doctest.h>

#include <cmath>
#include <random>

#include "kanforge/spline.hpp"
#include "oracles.hpp"

using namespace kanforge;

namespace {

// Max of one-sided difference quotients of length delta taken at every scan
// point and every breakpoint, in both directions.
double fd_slope_scan(const Spline& s, int m) {
  const double a = s.domain().lo, b = s.domain().hi;
  const double delta = 1e-8 * (b - a);
  std::vector<double> pts;
  for (int i = 0; i <= m; ++i) pts.push_back(i == m ? b : a + (b - a) * i / m);
  pts.insert(pts.end(), s.breaks().begin(), s.breaks().end());
  double best = 0.0;
  for (double t : pts) {
    if (t + delta <= b) best = std::max(best, std::fabs(s(t + delta) - s(t)) / delta);
    if (t - delta >= a) best = std::max(best, std::fabs(s(t) - s(t - delta)) / delta);
  }
  return best;
}

Spline random_spline(std::mt19937_64& rng, int degree, bool uniform) {
  std::uniform_int_distribution<int> grid(2, 9);
  std::uniform_real_distribution<double> u(-2.0, 2.0), gap(0.05, 1.0);
  const int G = grid(rng);
  std::vector<double> br;
  if (uniform) {
    const double a = u(rng);
    br = uniform_knots(a, a + 4.0 * gap(rng), G);
  } else {
    double t = u(rng);
    for (int i = 0; i < G; ++i) {
      br.push_back(t);
      t += gap(rng);
    }
  }
  std::vector<double> c(G + degree - 1);
  for (double& v : c) v = u(rng);
  return Spline(degree, br, c);
}

}  // namespace

TEST_CASE("uniform knots") {
  CHECK(uniform_knots(0, 1, 5) == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(uniform_knots(0, 1, 2) == std::vector<double>{0, 1});
  const auto k12 = uniform_knots(0, 1, 12);
  CHECK(k12.back() == 1.0);
  CHECK(k12[1] == doctest::Approx(1.0 / 11).epsilon(1e-15));
  CHECK_THROWS(uniform_knots(0, 1, 1));
}

TEST_CASE("piecewise-linear interpolants") {
  const auto id = [](double t) { return t; };
  for (int G : {2, 3, 10}) {
    const Spline s = pl_interpolant(id, 0, 1, G);
    CHECK(s(0.7) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(spline_lipschitz(s).value == doctest::Approx(1.0).epsilon(1e-14));
  }
  const auto sn = [](double t) { return std::sin(t); };
  const Spline s2 = pl_interpolant(sn, 0, 1, 2);
  CHECK(s2(0.0) == 0.0);
  CHECK(s2(1.0) == std::sin(1.0));
  CHECK(spline_lipschitz(s2).value == doctest::Approx(std::sin(1.0)).epsilon(1e-14));
  CHECK(spline_lipschitz(s2).value <= 1.0);

  const Spline s35 = pl_interpolant(sn, 0, 1, 35);
  const double h = 1.0 / 34;
  CHECK(std::fabs(s35(0.5) - std::sin(0.5)) <= 2e-4);
  CHECK(sup_error(sn, s35, 100000) <= h * h / 8);

  // the constant is exactly the largest secant slope
  double secant = 0.0;
  const auto br = s35.breaks();
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    secant = std::max(secant, std::fabs(std::sin(br[i + 1]) - std::sin(br[i])) / (br[i + 1] - br[i]));
  }
  CHECK(spline_lipschitz(s35).value == doctest::Approx(secant).epsilon(1e-13));
  CHECK(spline_lipschitz(s35).exact);
}

TEST_CASE("exact polynomial splines") {
  const double quarter_sq[] = {0, 0, 0.25};
  const Spline q02 = exact_poly_spline(quarter_sq, 0, 2, 2, 4);
  CHECK(q02(1.0) == 0.25);
  CHECK(q02(2.0) == 1.0);
  CHECK(spline_lipschitz(q02).value == 1.0);
  const Spline q11 = exact_poly_spline(quarter_sq, -1, 1, 2, 4);
  CHECK(spline_lipschitz(q11).value == 0.5);
  const double zero[] = {0};
  const Spline z = exact_poly_spline(zero, 0, 1, 3, 5);
  CHECK(spline_lipschitz(z).value == 0.0);
  CHECK(Spline::identity({0, 1})(0.7) == 0.7);
  const double cubic[] = {0, 0, 0, 1};
  CHECK_THROWS(exact_poly_spline(cubic, 0, 1, 2, 4));
}

TEST_CASE("spline construction errors") {
  CHECK_THROWS(Spline(1, {0, 1}, {0}));
  CHECK_THROWS(Spline(1, {1, 0}, {0, 1}));
  CHECK_THROWS(Spline(1, {0}, {}));
  CHECK_THROWS(Spline(-1, {0, 1}, {0, 1}));
  CHECK_THROWS(Spline(1, {0, 1}, {0, NAN}));
}

TEST_CASE("evaluation agrees with recursive Cox-de Boor") {
  std::mt19937_64 rng(41);
  for (int degree = 0; degree <= 5; ++degree) {
    for (int rep = 0; rep < 20; ++rep) {
      const Spline s = random_spline(rng, degree, rep % 2 == 0);
      const double a = s.domain().lo, b = s.domain().hi;
      double worst = 0.0;
      for (int i = 0; i <= 1000; ++i) {
        const double t = i == 1000 ? b : a + (b - a) * i / 1000;
        worst = std::max(worst, std::fabs(s(t) - oracle::spline_value(s.breaks(), s.coefficients(), degree, t)));
      }
      CHECK(worst <= 1e-12);
      std::vector<double> vals(degree + 1);
      for (int i = 0; i <= 50; ++i) {
        const double t = i == 50 ? b : a + (b - a) * i / 50;
        const int first = s.basis(t, vals);
        const auto knots = oracle::clamped_knots(s.breaks(), degree);
        double sum = 0.0;
        for (int j = 0; j <= degree; ++j) {
          sum += vals[j];
          CHECK_MESSAGE(std::fabs(vals[j] - oracle::bspline_basis(knots, first + j, degree, t)) <= 1e-12, degree << " " << t << " " << first << " " << j << " " << s.uniform());
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("property: polynomial reproduction") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-3.0, 3.0), len(0.1, 4.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 1 + rep % 5;
    const int d = rep % (k + 1);
    std::vector<double> poly(d + 1);
    double scale = 0.0;
    for (double& c : poly) {
      c = u(rng);
      scale = std::max(scale, std::fabs(c));
    }
    const double a = u(rng), b = a + len(rng);
    const int G = 2 + rep % 7;
    const Spline s = exact_poly_spline(poly, a, b, k, G);
    const double span = std::max({1.0, std::fabs(a), std::fabs(b)});
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double t = a + (b - a) * i / 1000;
      double p = 0.0;
      for (int j = d; j >= 0; --j) p = p * t + poly[j];
      worst = std::max(worst, std::fabs(s(t) - p));
    }
    CHECK(worst <= 1e-10 * scale * std::pow(span, d));
  }
}

TEST_CASE("property: interpolants of sin and cos obey the slope bound") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(-6.0, 6.0), len(0.01, 8.0);
  for (int rep = 0; rep < 300; ++rep) {
    const double a = u(rng), b = a + len(rng);
    const int G = 2 + rep % 40;
    const bool use_sin = rep % 2 == 0;
    const auto f = [use_sin](double t) { return use_sin ? std::sin(t) : std::cos(t); };
    const auto df = [use_sin](double t) { return use_sin ? std::cos(t) : -std::sin(t); };
    double sup_df = 0.0;
    for (int i = 0; i <= 20000; ++i) sup_df = std::max(sup_df, std::fabs(df(a + (b - a) * i / 20000)));
    const LipValue lip = spline_lipschitz(pl_interpolant(f, a, b, G));
    CHECK(lip.exact);
    CHECK(lip.value <= sup_df + 1e-12);
    CHECK(lip.value <= 1.0);
  }
}

TEST_CASE("property: Lipschitz constant matches a finite-difference scan") {
  std::mt19937_64 rng(53);
  for (int degree = 1; degree <= 3; ++degree) {
    for (int rep = 0; rep < 15; ++rep) {
      const Spline s = random_spline(rng, degree, rep % 3 != 0);
      const LipValue lip = spline_lipschitz(s);
      CHECK(lip.exact);
      const double scan = fd_slope_scan(s, 100000);
      CHECK(std::fabs(lip.value - scan) <= 1e-6 * std::max(lip.value, 1e-300));
    }
  }
  for (int degree = 4; degree <= 5; ++degree) {
    const Spline s = random_spline(rng, degree, true);
    const LipValue lip = spline_lipschitz(s);
    CHECK_FALSE(lip.exact);
    CHECK(lip.value <= fd_slope_scan(s, 100000) * (1 + 1e-6));
  }
}

TEST_CASE("derivative spline") {
  std::mt19937_64 rng(59);
  for (int degree = 1; degree <= 4; ++degree) {
    const Spline s = random_spline(rng, degree, false);
    const Spline d = s.derivative();
    CHECK(d.degree() == degree - 1);
    const double a = s.domain().lo, b = s.domain().hi;
    for (int i = 1; i < 40; ++i) {
      const double t = a + (b - a) * (i + 0.37) / 41;
      const double h = 1e-6 * (b - a);
      const double fd = (s(t + h) - s(t - h)) / (2 * h);
      CHECK(d(t) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      CHECK(s.derivative_at(t) == doctest::Approx(d(t)).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("evaluation outside the domain continues linearly and is counted") {
  const double sq[] = {0, 0, 1};
  const Spline s = exact_poly_spline(sq, 0, 1, 2, 4);
  reset_out_of_domain_hits();
  CHECK(s(1.0) == 1.0);
  CHECK(out_of_domain_hits() == 0);
  CHECK(s(1.5) == doctest::Approx(1.0 + 2.0 * 0.5).epsilon(1e-14));
  CHECK(s(-0.5) == doctest::Approx(0.0).scale(1.0));
  CHECK(out_of_domain_hits() == 2);
  reset_out_of_domain_hits();
  CHECK(out_of_domain_hits() == 0);
}

TEST_CASE("JSON round trip is bitwise") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 60; ++rep) {
    const Spline s = random_spline(rng, rep % 4, rep % 2 == 0);
    const Json j = spline_to_json(s);
    CHECK(j.contains("knots") == !s.uniform());
    CHECK(j["grid_points"] == s.grid_points());
    const Spline back = spline_from_json(Json::parse(j.dump()));
    CHECK(back == s);
  }
  CHECK_THROWS(spline_from_json(Json::parse(R"({"order":1})")));
}

TEST_CASE("cubic interpolation error of sin tracks h^4") {
  const auto f = [](double t) { return std::sin(t); };
  const int grids[] = {5, 12, 35};
  const double reference[] = {7.25e-5, 1.52e-6, 1.74e-8};
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Spline s = cubic_interpolant(f, 0, 1, grids[i]);
    for (double t : s.breaks()) CHECK(std::fabs(s(t) - f(t)) <= 1e-15);
    const double err = sup_error(f, s, 100000);
    CHECK(err / reference[i] < 10.0);
    CHECK(reference[i] / err < 10.0);
    const double h = 1.0 / (grids[i] - 1);
    const double ratio = err / std::pow(h, 4);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(hi / lo < 2.0);
}

TEST_CASE("least-squares fits reproduce polynomials") {
  const auto f = [](double t) { return 1.0 - 2.0 * t + 0.5 * t * t * t; };
  const Spline s = lsq_fit(f, 0, 1, 3, 6);
  CHECK(sup_error(f, s, 10000) <= 1e-12);
}
