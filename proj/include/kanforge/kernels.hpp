#pragma once

// Sampling kernels. Each kernel has an OpenMP-parallel version in
// `kanforge::kernels` and a plain serial version in
// `kanforge::kernels::reference` that the tests hold the parallel one to.
// Reductions are max-reductions, so both versions agree bitwise.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kanforge/expr.hpp"
#include "kanforge/range.hpp"

namespace kanforge {

class KanNetwork;
class Spline;

namespace kernels {

/// Row-major point set in R^dim.
class SampleSet {
 public:
  SampleSet(int dim, std::vector<double> data);
  int dim() const { return dim_; }
  std::size_t size() const { return data_.size() / static_cast<std::size_t>(dim_); }
  std::span<const double> point(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& data() const { return data_; }

 private:
  int dim_;
  std::vector<double> data_;
};

/// `count` points uniform on [0,1]^dim (std::mt19937_64). With
/// `include_corners` the all-zeros and all-ones points are prepended.
SampleSet uniform_samples(int dim, std::size_t count, std::uint64_t seed, bool include_corners = false);

/// Uniform points on [margin, 1 - margin]^dim.
SampleSet interior_samples(int dim, std::size_t count, std::uint64_t seed, double margin);

/// Evaluates the tree on a flat program; used by both versions below.
class TreeProgram {
 public:
  explicit TreeProgram(const CompTree& tree);
  std::size_t size() const { return nodes_.size(); }
  /// Writes the value of every node (pre-order ids) into `values`.
  void run(std::span<const double> x, std::span<double> values) const;
  double root(std::span<const double> x, std::span<double> scratch) const;

 private:
  std::vector<FlatNode> nodes_;
};

/// forward(net, x)[output] for every sample.
std::vector<double> forward_batch(const KanNetwork& net, const SampleSet& samples);

/// max_x |net(x) - tree(x)|.
double max_abs_error(const KanNetwork& net, const CompTree& tree, const SampleSet& samples);
/// max_t |net(h(t)) - tree(t)| for the affine map h of `box`; samples are t in [0,1]^n.
double max_abs_error(const KanNetwork& net, const CompTree& tree, const SampleSet& samples, const AffineBox& box);

/// Per node id, max_x |g_v(x)|.
std::vector<double> node_sup_abs(const CompTree& tree, const SampleSet& samples);

/// max |f(t) - s(t)| over `samples` equally spaced points of the spline domain.
double spline_sup_error(const std::function<double(double)>& f, const Spline& s, std::size_t samples);

namespace reference {

std::vector<double> forward_batch(const KanNetwork& net, const SampleSet& samples);
double max_abs_error(const KanNetwork& net, const CompTree& tree, const SampleSet& samples);
double max_abs_error(const KanNetwork& net, const CompTree& tree, const SampleSet& samples, const AffineBox& box);
std::vector<double> node_sup_abs(const CompTree& tree, const SampleSet& samples);
double spline_sup_error(const std::function<double(double)>& f, const Spline& s, std::size_t samples);

}  // namespace reference

}  // namespace kernels
}  // namespace kanforge
