#include "kanforge/range.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "kanforge/kernels.hpp"

namespace kanforge {

namespace {

constexpr double kPi = std::numbers::pi;

void require_arity(OpKind op, std::size_t count, const char* what) {
  if (static_cast<int>(count) != arity(op)) {
    throw std::invalid_argument(std::string(what) + ": " + std::string(op_name(op)) + " expects " +
                                std::to_string(arity(op)) + " argument(s), got " +
                                std::to_string(count));
  }
}

// Exact image of sin/cos. Extrema sit at offset + k*pi with value (-1)^k.
Interval trig_image(OpKind op, const Interval& in) {
  if (in.width() >= 2.0 * kPi) return {-1.0, 1.0};
  const auto f = [op](double t) { return op == OpKind::Sin ? std::sin(t) : std::cos(t); };
  double lo = std::min(f(in.lo), f(in.hi));
  double hi = std::max(f(in.lo), f(in.hi));
  const double offset = op == OpKind::Sin ? kPi / 2.0 : 0.0;
  const auto k0 = static_cast<long long>(std::ceil((in.lo - offset) / kPi));
  const auto k1 = static_cast<long long>(std::floor((in.hi - offset) / kPi));
  for (long long k = k0; k <= k1; ++k) {
    if (k % 2 == 0) {
      hi = 1.0;
    } else {
      lo = -1.0;
    }
  }
  return {lo, hi};
}

}  // namespace

int block_depth(OpKind op) { return op == OpKind::Mul ? 3 : 1; }

Interval range_rule(OpKind op, std::span<const Interval> r) {
  require_arity(op, r.size(), "range_rule");
  switch (op) {
    case OpKind::Add:
      return {r[0].lo + r[1].lo, r[0].hi + r[1].hi};
    case OpKind::Sub:
      return {r[0].lo - r[1].hi, r[0].hi - r[1].lo};
    case OpKind::Mul: {
      const double p[] = {r[0].lo * r[1].lo, r[0].lo * r[1].hi, r[0].hi * r[1].lo, r[0].hi * r[1].hi};
      return {*std::min_element(std::begin(p), std::end(p)), *std::max_element(std::begin(p), std::end(p))};
    }
    case OpKind::Sin:
    case OpKind::Cos:
      return trig_image(op, r[0]);
    case OpKind::Relu:
      return {std::max(r[0].lo, 0.0), std::max(r[0].hi, 0.0)};
    case OpKind::Abs:
      if (r[0].lo >= 0.0) return r[0];
      if (r[0].hi <= 0.0) return {-r[0].hi, -r[0].lo};
      return {0.0, r[0].mag()};
  }
  return {};
}

std::vector<double> partial_lip(OpKind op, std::span<const Interval> d) {
  require_arity(op, d.size(), "partial_lip");
  switch (op) {
    case OpKind::Add:
    case OpKind::Sub:
      return {1.0, 1.0};
    case OpKind::Mul:
      // d/du (u v) = v, so Lip_1 = sup |v| over the second factor.
      return {d[1].mag(), d[0].mag()};
    default:
      return {1.0};
  }
}

double NodeAnnotation::lip_constant() const {
  double c = 0.0;
  for (double l : partial_lips) c = std::max(c, l);
  return c;
}

AnnotatedTree annotate_ranges(const CompTree& tree, std::span<const Interval> leaf_box) {
  AnnotatedTree out{tree, flatten(tree), {}, {}, {}};
  const auto& nodes = out.nodes;
  out.ranges.resize(nodes.size());
  out.annotation_index.assign(nodes.size(), -1);

  // Children have larger pre-order ids than their parents.
  for (int id = static_cast<int>(nodes.size()) - 1; id >= 0; --id) {
    const FlatNode& nd = nodes[id];
    if (nd.leaf) {
      if (leaf_box.empty()) {
        out.ranges[id] = kUnitInterval;
      } else {
        if (static_cast<std::size_t>(nd.coord) > leaf_box.size()) {
          throw std::invalid_argument("leaf box has fewer coordinates than the tree");
        }
        out.ranges[id] = leaf_box[nd.coord - 1];
      }
      continue;
    }
    std::vector<Interval> dom;
    for (int c : nd.children) dom.push_back(out.ranges[c]);
    out.ranges[id] = range_rule(nd.op, dom);
  }

  for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
    const FlatNode& nd = nodes[id];
    if (nd.leaf) continue;
    NodeAnnotation a;
    a.node_id = id;
    a.op = nd.op;
    a.range = out.ranges[id];
    for (int c : nd.children) a.input_domain.push_back(out.ranges[c]);
    a.partial_lips = partial_lip(nd.op, a.input_domain);
    a.c_op = block_depth(nd.op);
    out.annotation_index[id] = static_cast<int>(out.annotations.size());
    out.annotations.push_back(std::move(a));
  }
  return out;
}

double LipBudget::simplified_bound() const { return std::pow(std::max(c_star, 1.0), L_f); }

LipBudget lip_budget(const AnnotatedTree& annotated) {
  LipBudget b;
  for (const NodeAnnotation& a : annotated.annotations) {
    const double c = a.lip_constant();
    b.product_bound *= std::pow(std::max(c, 1.0), a.c_op);
    b.c_star = std::max(b.c_star, c);
    b.L_f += a.c_op;
    b.per_node.push_back({a.node_id, c, a.c_op});
  }
  return b;
}

RangeReport verify_ranges_numerically(const CompTree& tree, std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("verify_ranges_numerically: samples must be >= 1");
  const AnnotatedTree annotated = annotate_ranges(tree);
  const int n = tree_stats(tree).n;
  const auto pts = kernels::uniform_samples(n, samples, seed, /*include_corners=*/true);
  const auto measured = kernels::node_sup_abs(tree, pts);

  RangeReport report;
  for (std::size_t id = 0; id < annotated.nodes.size(); ++id) {
    const double certified = annotated.ranges[id].mag();
    const bool ok = measured[id] <= certified + 1e-12;
    report.nodes.push_back({static_cast<int>(id), certified, measured[id], ok});
    report.ok = report.ok && ok;
  }
  return report;
}

AffineBox affine_box(std::vector<Interval> intervals) {
  if (intervals.empty()) throw std::invalid_argument("affine_box: empty box");
  AffineBox box;
  double longest = 0.0;
  double shortest = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < intervals.size(); ++p) {
    if (intervals[p].degenerate()) {
      throw std::invalid_argument("affine_box: degenerate interval for coordinate " + std::to_string(p + 1));
    }
    longest = std::max(longest, intervals[p].width());
    shortest = std::min(shortest, intervals[p].width());
  }
  box.intervals = std::move(intervals);
  box.lip_h = longest;
  box.lip_h_inv = 1.0 / shortest;
  return box;
}

AffineBox unit_box(int n) { return affine_box(std::vector<Interval>(n, kUnitInterval)); }

std::vector<double> apply_affine(const AffineBox& box, std::span<const double> t) {
  if (t.size() != box.dim()) throw std::invalid_argument("apply_affine: dimension mismatch");
  std::vector<double> y(t.size());
  for (std::size_t p = 0; p < t.size(); ++p) {
    y[p] = box.intervals[p].lo + t[p] * box.intervals[p].width();
  }
  return y;
}

std::vector<double> apply_affine_inverse(const AffineBox& box, std::span<const double> y) {
  if (y.size() != box.dim()) throw std::invalid_argument("apply_affine_inverse: dimension mismatch");
  std::vector<double> t(y.size());
  for (std::size_t p = 0; p < y.size(); ++p) {
    t[p] = (y[p] - box.intervals[p].lo) / box.intervals[p].width();
  }
  return t;
}

}  // namespace kanforge
