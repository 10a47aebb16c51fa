#include "kanforge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "kanforge/network.hpp"
#include "kanforge/spline.hpp"

namespace kanforge::kernels {

SampleSet::SampleSet(int dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
  if (dim_ < 1) throw std::invalid_argument("SampleSet: dim must be >= 1");
  if (data_.size() % static_cast<std::size_t>(dim_) != 0) {
    throw std::invalid_argument("SampleSet: data size is not a multiple of dim");
  }
}

SampleSet uniform_samples(int dim, std::size_t count, std::uint64_t seed, bool include_corners) {
  if (dim < 1) throw std::invalid_argument("uniform_samples: dim must be >= 1");
  std::vector<double> data;
  data.reserve((count + 2) * dim);
  if (include_corners) {
    data.insert(data.end(), dim, 0.0);
    data.insert(data.end(), dim, 1.0);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < count * dim; ++i) data.push_back(u(rng));
  return SampleSet(dim, std::move(data));
}

SampleSet interior_samples(int dim, std::size_t count, std::uint64_t seed, double margin) {
  if (!(margin >= 0.0 && margin < 0.5)) throw std::invalid_argument("interior_samples: margin must be in [0, 0.5)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(margin, 1.0 - margin);
  std::vector<double> data(count * dim);
  for (double& v : data) v = u(rng);
  return SampleSet(dim, std::move(data));
}

TreeProgram::TreeProgram(const CompTree& tree) : nodes_(flatten(tree)) {}

void TreeProgram::run(std::span<const double> x, std::span<double> values) const {
  for (std::size_t id = nodes_.size(); id-- > 0;) {
    const FlatNode& nd = nodes_[id];
    if (nd.leaf) {
      values[id] = x[nd.coord - 1];
    } else if (nd.children.size() == 1) {
      values[id] = apply_op(nd.op, values[nd.children[0]]);
    } else {
      values[id] = apply_op(nd.op, values[nd.children[0]], values[nd.children[1]]);
    }
  }
}

double TreeProgram::root(std::span<const double> x, std::span<double> scratch) const {
  run(x, scratch);
  return scratch[0];
}

namespace {

void check_dims(const KanNetwork& net, const SampleSet& samples) {
  if (samples.dim() != net.input_dim()) throw std::invalid_argument("sample dimension does not match the network");
}

std::size_t tree_dim_check(const CompTree& tree, const SampleSet& samples) {
  if (tree_stats(tree).n > samples.dim()) throw std::invalid_argument("sample dimension below the tree's input dimension");
  return samples.size();
}

double grid_point(const Spline& s, std::size_t i, std::size_t samples) {
  const Interval d = s.domain();
  if (i + 1 == samples) return d.hi;
  return d.lo + d.width() * static_cast<double>(i) / static_cast<double>(samples - 1);
}

}  // namespace

std::vector<double> forward_batch(const KanNetwork& net, const SampleSet& samples) {
  check_dims(net, samples);
  const auto count = static_cast<std::ptrdiff_t>(samples.size());
  std::vector<double> out(samples.size());
#pragma omp parallel
  {
    KanNetwork::Scratch scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) out[i] = net.evaluate(samples.point(i), scratch);
  }
  return out;
}

namespace {

double error_impl(const KanNetwork& net, const CompTree& tree, const SampleSet& samples, const AffineBox* box) {
  check_dims(net, samples);
  const auto count = static_cast<std::ptrdiff_t>(tree_dim_check(tree, samples));
  const TreeProgram prog(tree);
  double worst = 0.0;
#pragma omp parallel reduction(max : worst)
  {
    KanNetwork::Scratch scratch;
    std::vector<double> values(prog.size());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto x = samples.point(i);
      const double y = box ? net.evaluate(apply_affine(*box, x), scratch) : net.evaluate(x, scratch);
      worst = std::max(worst, std::fabs(y - prog.root(x, values)));
    }
  }
  return worst;
}

}  // namespace

double max_abs_error(const KanNetwork& net, const CompTree& tree, const SampleSet& samples) {
  return error_impl(net, tree, samples, nullptr);
}

double max_abs_error(const KanNetwork& net, const CompTree& tree, const SampleSet& samples, const AffineBox& box) {
  return error_impl(net, tree, samples, &box);
}

std::vector<double> node_sup_abs(const CompTree& tree, const SampleSet& samples) {
  const auto count = static_cast<std::ptrdiff_t>(tree_dim_check(tree, samples));
  const TreeProgram prog(tree);
  const std::size_t m = prog.size();
  std::vector<double> sup(m, 0.0);
#pragma omp parallel
  {
    std::vector<double> local(m, 0.0);
    std::vector<double> values(m);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      prog.run(samples.point(i), values);
      for (std::size_t v = 0; v < m; ++v) local[v] = std::max(local[v], std::fabs(values[v]));
    }
#pragma omp critical
    for (std::size_t v = 0; v < m; ++v) sup[v] = std::max(sup[v], local[v]);
  }
  return sup;
}

double spline_sup_error(const std::function<double(double)>& f, const Spline& s, std::size_t samples) {
  if (samples < 2) throw std::invalid_argument("spline_sup_error: samples must be >= 2");
  const auto count = static_cast<std::ptrdiff_t>(samples);
  double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const double t = grid_point(s, i, samples);
    worst = std::max(worst, std::fabs(f(t) - s(t)));
  }
  return worst;
}

namespace reference {

std::vector<double> forward_batch(const KanNetwork& net, const SampleSet& samples) {
  check_dims(net, samples);
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out.push_back(net.evaluate(samples.point(i)));
  return out;
}

double max_abs_error(const KanNetwork& net, const CompTree& tree, const SampleSet& samples) {
  check_dims(net, samples);
  tree_dim_check(tree, samples);
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto x = samples.point(i);
    worst = std::max(worst, std::fabs(net.evaluate(x) - eval_tree(tree, x)));
  }
  return worst;
}

double max_abs_error(const KanNetwork& net, const CompTree& tree, const SampleSet& samples, const AffineBox& box) {
  check_dims(net, samples);
  tree_dim_check(tree, samples);
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto x = samples.point(i);
    worst = std::max(worst, std::fabs(net.evaluate(apply_affine(box, x)) - eval_tree(tree, x)));
  }
  return worst;
}

std::vector<double> node_sup_abs(const CompTree& tree, const SampleSet& samples) {
  tree_dim_check(tree, samples);
  const TreeProgram prog(tree);
  std::vector<double> sup(prog.size(), 0.0);
  std::vector<double> values(prog.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    prog.run(samples.point(i), values);
    for (std::size_t v = 0; v < sup.size(); ++v) sup[v] = std::max(sup[v], std::fabs(values[v]));
  }
  return sup;
}

double spline_sup_error(const std::function<double(double)>& f, const Spline& s, std::size_t samples) {
  if (samples < 2) throw std::invalid_argument("spline_sup_error: samples must be >= 2");
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = grid_point(s, i, samples);
    worst = std::max(worst, std::fabs(f(t) - s(t)));
  }
  return worst;
}

}  // namespace reference

}  // namespace kanforge::kernels
