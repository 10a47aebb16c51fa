#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kanforge/expr.hpp"
#include "kanforge/interval.hpp"

namespace kanforge {

/// Block depth c_op of the primitive block realising `op`.
int block_depth(OpKind op);

/// Interval enclosure of op applied to the child ranges.
Interval range_rule(OpKind op, std::span<const Interval> child_ranges);

/// Partial Lipschitz constants Lip_i(op restricted to the domain), one per argument.
std::vector<double> partial_lip(OpKind op, std::span<const Interval> input_domain);

struct NodeAnnotation {
  int node_id = 0;
  OpKind op = OpKind::Add;
  Interval range;                     // output enclosure; B_v = range.mag()
  std::vector<Interval> input_domain;  // D_v, one interval per child
  std::vector<double> partial_lips;
  int c_op = 1;

  double bound() const { return range.mag(); }
  /// C_{op(v), D_v} = max_i Lip_i.
  double lip_constant() const;
};

struct AnnotatedTree {
  CompTree tree;
  std::vector<FlatNode> nodes;
  std::vector<Interval> ranges;             // per node id (leaves included)
  std::vector<NodeAnnotation> annotations;  // internal nodes, pre-order
  std::vector<int> annotation_index;        // node id -> index into annotations, -1 for leaves

  const NodeAnnotation& at(int node_id) const { return annotations.at(annotation_index.at(node_id)); }
  Interval root_range() const { return ranges.front(); }
};

/// Structural range recursion. `leaf_box[p-1]` is the range of coordinate p;
/// an empty span means [0,1] for every coordinate.
AnnotatedTree annotate_ranges(const CompTree& tree, std::span<const Interval> leaf_box = {});

struct LipBudgetEntry {
  int node_id;
  double lip_constant;
  int c_op;
};

struct LipBudget {
  double product_bound = 1.0;  // prod_v max(C_v, 1)^{c_v}
  double c_star = 0.0;         // max_v C_v
  int L_f = 0;                 // sum_v c_v
  std::vector<LipBudgetEntry> per_node;

  double simplified_bound() const;  // max(C*, 1)^{L_f}
};

LipBudget lip_budget(const AnnotatedTree& annotated);

struct RangeCheck {
  int node_id;
  double certified;  // B_v
  double measured;   // sampled sup |g_v|
  bool ok;
};

struct RangeReport {
  std::vector<RangeCheck> nodes;  // every node, pre-order
  bool ok = true;
};

/// Samples `samples` uniform points of [0,1]^n plus the two corners 0 and 1
/// and compares the sampled sup |g_v| with B_v (tolerance 1e-12).
RangeReport verify_ranges_numerically(const CompTree& tree, std::size_t samples, std::uint64_t seed);

struct AffineBox {
  std::vector<Interval> intervals;
  double lip_h = 1.0;      // max_p (b_p - a_p)
  double lip_h_inv = 1.0;  // 1 / min_p (b_p - a_p)

  std::size_t dim() const { return intervals.size(); }
};

AffineBox affine_box(std::vector<Interval> intervals);
AffineBox unit_box(int n);
std::vector<double> apply_affine(const AffineBox& box, std::span<const double> t);
std::vector<double> apply_affine_inverse(const AffineBox& box, std::span<const double> y);

}  // namespace kanforge
