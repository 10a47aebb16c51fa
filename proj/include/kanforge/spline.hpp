#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "kanforge/interval.hpp"

namespace kanforge {

using Json = nlohmann::ordered_json;

struct LipValue {
  double value = 0.0;
  bool exact = true;  // closed form; false when obtained by sampling
};

/// Univariate B-spline s(t) = sum_i c_i B_{i,k}(t) on [a, b].
///
/// `degree` is the polynomial degree k (a cubic has k = 3). The G distinct
/// grid points are stored as `breaks`; the knot vector is clamped, i.e. a and
/// b are repeated k + 1 times, so there are G + k - 1 coefficients and the
/// spline interpolates its end coefficients. Grids are uniform unless built
/// from explicit breakpoints.
///
/// Outside [a, b] the spline continues linearly with its one-sided end slope,
/// so the Lipschitz constant on R equals the one on [a, b].
class Spline {
 public:
  Spline(int degree, std::vector<double> breaks, std::vector<double> coefficients);

  /// t -> slope * t + offset on the domain, as a two-knot degree-1 spline.
  static Spline linear(const Interval& domain, double slope, double offset);
  static Spline identity(const Interval& domain) { return linear(domain, 1.0, 0.0); }

  int degree() const { return degree_; }
  Interval domain() const { return {breaks_.front(), breaks_.back()}; }
  int grid_points() const { return static_cast<int>(breaks_.size()); }
  bool uniform() const { return uniform_; }
  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& coefficients() const { return coefs_; }

  double operator()(double t) const;
  /// Value of the derivative (right derivative at breakpoints).
  double derivative_at(double t) const;
  /// Derivative as a spline of degree k - 1 on the same grid (k >= 1).
  Spline derivative() const;

  /// Nonzero basis functions at t: returns the index of the first one and
  /// writes degree + 1 values.
  int basis(double t, std::span<double> values) const;

  Spline scaled(double factor) const;

  friend bool operator==(const Spline&, const Spline&) = default;

 private:
  double knot(int i) const;  // clamped knot vector, size G + 2k
  int span_of(double t) const;
  double de_boor(int span, double t) const;

  int degree_;
  std::vector<double> breaks_;
  std::vector<double> coefs_;
  bool uniform_ = true;
  double inv_h_ = 0.0;
  double slope_lo_ = 0.0;  // one-sided end slopes used for extrapolation
  double slope_hi_ = 0.0;
};

/// x_r = a + r (b - a) / (G - 1), r = 0..G-1, with x_{G-1} = b exactly.
std::vector<double> uniform_knots(double a, double b, int G);

/// Continuous piecewise-linear interpolant of f on the uniform G-point grid.
Spline pl_interpolant(const std::function<double(double)>& f, double a, double b, int G);

/// Degree-1 spline through (breaks[r], values[r]); breaks may be non-uniform.
Spline piecewise_linear(std::vector<double> breaks, std::vector<double> values);

/// Exact B-spline representation of sum_j poly[j] t^j (degree <= k) on a
/// uniform G-point grid, with coefficients from the polar form.
Spline exact_poly_spline(std::span<const double> poly, double a, double b, int k, int G);

/// Cubic spline interpolating f at the G grid points with not-a-knot end
/// conditions (G >= 4).
Spline cubic_interpolant(const std::function<double(double)>& f, double a, double b, int G);

/// Least-squares spline fit of degree k to f sampled at `samples` equally
/// spaced points.
Spline lsq_fit(const std::function<double(double)>& f, double a, double b, int k, int G, int samples = 1000);

/// sup |s'| on the domain.
LipValue spline_lipschitz(const Spline& s);

/// max |f - s| over `samples` equally spaced points of the spline domain.
double sup_error(const std::function<double(double)>& f, const Spline& s, std::size_t samples);

/// Number of evaluations that landed outside a spline domain since the last reset.
std::uint64_t out_of_domain_hits();
void reset_out_of_domain_hits();

/// {order, domain: [a, b], grid_points, coefficients[, knots]}; `knots`
/// (the G breakpoints) is written only for non-uniform grids.
Json spline_to_json(const Spline& s);
Spline spline_from_json(const Json& j);

}  // namespace kanforge
