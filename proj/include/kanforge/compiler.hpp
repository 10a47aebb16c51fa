#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kanforge/blocks.hpp"
#include "kanforge/expr.hpp"
#include "kanforge/network.hpp"
#include "kanforge/range.hpp"

namespace kanforge {

std::string_view version();

struct CompileConfig {
  int grid = 35;   // sin/cos interpolation grid G
  int order = 3;   // spline degree k for smooth fits; must be >= 2
  bool faithful_widths = false;
  int quad_degree = 2;  // degree of the exact squaring edges in mul blocks
  int quad_grid = 4;
  std::set<OpKind> allowed_ops{std::begin(kAllOps), std::end(kAllOps)};

  void validate() const;
};

struct VerifyConfig {
  std::size_t samples = 100000;
  std::uint64_t seed = 42;
  std::size_t jacobian_points = 100;
  double error_allowance = 1e-10;  // absolute roundoff allowance on the error bound
};

class CompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Names the violated inequality.
class CertificationError : public std::runtime_error {
 public:
  CertificationError(std::string inequality, const std::string& detail)
      : std::runtime_error(inequality + " violated: " + detail), inequality_(std::move(inequality)) {}
  const std::string& inequality() const { return inequality_; }

 private:
  std::string inequality_;
};

struct ScheduleEntry {
  int node_id = 0;
  OpKind op = OpKind::Add;
  int start_layer = 0;
  int c_op = 1;
  std::vector<std::string> consumed;  // wire tags read at start_layer
  std::string produced;               // "node:<id>" at start_layer + c_op
};

struct NodeCertificate {
  int node_id = 0;
  OpKind op = OpKind::Add;
  Interval range;
  std::vector<Interval> input_domain;
  std::vector<double> partial_lips;
  int start_layer = 0;
  int c_op = 1;
  int w_op = 1;
  BlockCertificate block;
};

struct Measured {
  double P = 0.0;
  int max_width = 0;
  double sup_error = 0.0;
  double jacobian_ratio_max = 0.0;  // max_x ||J(x)||_2 / W^L
  double range_slack_min = 0.0;     // min_v (B_v - sampled sup |g_v|)
  std::uint64_t out_of_domain = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct Certificate {
  std::string expr;
  std::string expr_hash;
  CompileConfig config;
  int n = 0, N = 0, depth = 0, sparsity = 0;
  int L_f = 0;
  int L = 0;
  std::vector<int> widths;
  double p_bound = 1.0;
  double p_simplified = 1.0;
  double c_star = 0.0;
  int w_max = 0;
  int width_bound = 0;     // n + 2 w_max N
  int width_bound_w4 = 0;  // n + 8 N
  double eps_op = 0.0;
  double c_tree = 0.0;
  double error_bound = 0.0;  // N max(C_tree, 1)^depth eps_op
  int rate_exponent = 0;     // 0 when every block is exact
  std::optional<AffineBox> box;
  double box_factor = 1.0;  // max(lip_h_inv, 1), already folded into p_bound
  std::vector<NodeCertificate> per_node;
  std::optional<Measured> measured;
};

Json certificate_to_json(const Certificate& cert);
Json annotations_to_json(const AnnotatedTree& annotated);

struct Compiled {
  KanNetwork net;
  Certificate cert;
  std::vector<ScheduleEntry> schedule;
  AnnotatedTree annotated;
  std::vector<Block> blocks;  // post-order, parallel to schedule
};

/// Post-order sequential block construction. Every layer carries all n
/// inputs, the live intermediates and the running block's internal
/// neurons; unless `faithful_widths` is set, dead wires are removed after.
Compiled compile(const CompTree& tree, const CompileConfig& config = {});

/// Prepends an affine layer y_p -> (y_p - a_p) / (b_p - a_p), so the network
/// accepts y in the box and computes tree(h^{-1}(y)) with the tree read on
/// [0,1]^n.
Compiled compile_on_box(const CompTree& tree, const AffineBox& box, const CompileConfig& config = {});

/// Drops neurons with no path to the output (layer 0 is kept whole) and
/// renumbers the rest.
KanNetwork dead_wire_elimination(const KanNetwork& net);

struct LayerGroups {
  int inputs = 0;
  int live = 0;
  int copies = 0;
  int internal = 0;
  int other = 0;
};

std::vector<LayerGroups> layer_groups(const KanNetwork& net);

struct Check {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

struct CheckReport {
  std::vector<Check> checks;
  Measured measured;
  bool ok = true;
  const Check* first_failure() const;
};

/// Measures the network and tests every certified inequality.
CheckReport check_network(const CompTree& tree, const KanNetwork& net, const Certificate& cert,
                          const VerifyConfig& verify = {});

/// Recompiles the certificate from the tree, checks `net` against it and
/// returns it with measured values; throws CertificationError on failure.
Certificate certify(const CompTree& tree, const KanNetwork& net, const CompileConfig& config = {},
                    const VerifyConfig& verify = {}, const std::optional<AffineBox>& box = std::nullopt);

}  // namespace kanforge
