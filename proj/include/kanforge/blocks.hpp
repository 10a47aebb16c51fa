#pragma once

#include <span>
#include <vector>

#include "kanforge/expr.hpp"
#include "kanforge/interval.hpp"
#include "kanforge/network.hpp"

namespace kanforge {

struct BlockLayer {
  int width_in = 0;
  int width_out = 0;
  std::vector<Edge> edges;
};

/// Small fixed KAN realising one operation on a bounded input domain.
struct Block {
  OpKind op = OpKind::Add;
  std::vector<BlockLayer> layers;
  /// Certified range of every neuron, per layer boundary 0..c_op.
  std::vector<std::vector<Interval>> neuron_ranges;
  /// Names of the neurons strictly inside the block, per hidden boundary 1..c_op-1.
  std::vector<std::vector<std::string>> internal_names;
  int c_op = 1;
  int w_op = 1;
  double lambda_op = 1.0;  // prod over layers of max_i max_j Lip(phi_ij)
  double eps_op = 0.0;     // certified sup error against the exact op on the domain
  std::vector<Interval> input_domain;
  Interval output_range;

  double evaluate(std::span<const double> inputs) const;
};

Block block_add(const Interval& u, const Interval& v);
Block block_sub(const Interval& u, const Interval& v);
/// One piecewise-linear interpolant of sin or cos on G grid points.
Block block_trig(OpKind op, const Interval& domain, int G);
/// u v = (u+v)^2/4 - (u-v)^2/4 with the squares as exact splines of the
/// given degree (>= 2) on `grid` points.
Block block_mul(const Interval& u, const Interval& v, int degree = 2, int grid = 4);
/// Relu or abs as an exact degree-1 spline with a breakpoint at 0.
Block block_pwl(OpKind op, const Interval& domain);

/// Dispatches on op. `grid` is the sin/cos interpolation grid.
Block build_block(OpKind op, std::span<const Interval> domain, int grid, int quad_degree = 2, int quad_grid = 4);

struct BlockCertificate {
  double lambda_op = 0.0;
  double eps_op = 0.0;
  double C = 0.0;    // max_i Lip_i(op) on the input domain
  double rhs = 1.0;  // max(C, 1)^{c_op}
  bool a5_ok = false;
};

BlockCertificate block_certificate(const Block& b);

Json block_to_json(const Block& b);

}  // namespace kanforge
