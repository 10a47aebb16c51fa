#include "kanforge/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "kanforge/kernels.hpp"

#ifndef KANFORGE_VERSION
#define KANFORGE_VERSION "0.0.0"
#endif

namespace kanforge {

std::string_view version() { return KANFORGE_VERSION; }

void CompileConfig::validate() const {
  if (grid < 2) throw std::invalid_argument("grid must be >= 2");
  if (order < 2) throw std::invalid_argument("order must be >= 2 (exact squares need degree 2)");
  if (quad_degree < 2) throw std::invalid_argument("quad_degree must be >= 2");
  if (quad_grid < 2) throw std::invalid_argument("quad_grid must be >= 2");
}

namespace {

std::string input_tag(int p) { return "input:" + std::to_string(p); }
std::string node_tag(int v) { return "node:" + std::to_string(v); }
std::string copy_tag(int p) { return "copy:" + std::to_string(p); }
std::string internal_tag(int v, const std::string& name) { return "internal:" + std::to_string(v) + ":" + name; }

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

Spline wire(const Interval& range, const std::string& what) {
  if (range.degenerate()) throw CompileError("degenerate range for wire " + what);
  return Spline::identity(range);
}

Json interval_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

Json config_json(const CompileConfig& c) {
  return {{"grid", c.grid}, {"order", c.order}, {"faithful_widths", c.faithful_widths},
          {"quad_degree", c.quad_degree}, {"quad_grid", c.quad_grid}};
}

class LayerBuilder {
 public:
  explicit LayerBuilder(int layers) : tags_(layers), index_(layers), edges_(layers > 0 ? layers - 1 : 0) {}

  void neuron(int l, std::string tag) {
    index_[l].emplace(tag, static_cast<int>(tags_[l].size()));
    tags_[l].push_back(std::move(tag));
  }
  void edge(int l, const std::string& from, const std::string& to, Spline phi) {
    edges_[l].push_back({index_[l].at(from), index_[l + 1].at(to), std::move(phi)});
  }
  int find(int l, const std::string& tag) const { return index_[l].at(tag); }

  KanNetwork finish(int output, Json meta) {
    std::vector<int> widths;
    for (const auto& t : tags_) widths.push_back(static_cast<int>(t.size()));
    return KanNetwork(std::move(widths), std::move(edges_), std::move(tags_), output, std::move(meta));
  }

 private:
  std::vector<std::vector<std::string>> tags_;
  std::vector<std::unordered_map<std::string, int>> index_;
  std::vector<std::vector<Edge>> edges_;
};

Certificate base_certificate(const CompTree& tree, const AnnotatedTree& annotated, const CompileConfig& config) {
  Certificate cert;
  cert.expr = render(tree);
  cert.expr_hash = tree_hash(tree);
  cert.config = config;
  const TreeStats st = tree_stats(tree);
  cert.n = st.n;
  cert.N = st.N;
  cert.depth = st.depth;
  cert.sparsity = st.sparsity;
  const LipBudget budget = lip_budget(annotated);
  cert.L_f = budget.L_f;
  cert.p_bound = budget.product_bound;
  cert.p_simplified = budget.simplified_bound();
  cert.c_star = budget.c_star;
  cert.c_tree = budget.c_star;
  return cert;
}

}  // namespace

Compiled compile(const CompTree& tree, const CompileConfig& config) {
  config.validate();
  if (const auto bad = validate_opset(tree, config.allowed_ops); !bad.empty()) {
    throw CompileError("unsupported operation '" + std::string(op_name(bad.front().op)) + "' at node " +
                       std::to_string(bad.front().node_id));
  }
  AnnotatedTree annotated = annotate_ranges(tree);
  const auto& nodes = annotated.nodes;
  const int n = tree_stats(tree).n;
  Certificate cert = base_certificate(tree, annotated, config);
  Json meta = {{"expr", cert.expr}, {"expr_hash", cert.expr_hash}, {"config", config_json(config)}};

  if (nodes.front().leaf) {
    LayerBuilder b(2);
    for (int p = 1; p <= n; ++p) b.neuron(0, input_tag(p));
    b.neuron(1, node_tag(0));
    b.edge(0, input_tag(nodes.front().coord), node_tag(0), wire(kUnitInterval, input_tag(nodes.front().coord)));
    KanNetwork net = b.finish(0, std::move(meta));
    cert.L = net.depth();
    cert.widths = net.widths();
    cert.width_bound = n;
    cert.width_bound_w4 = n;
    return {std::move(net), std::move(cert), {}, std::move(annotated), {}};
  }

  const std::vector<int> post = post_order_internal(nodes);
  const int count = static_cast<int>(nodes.size());
  std::vector<Block> blocks;
  std::vector<int> start(count, -1), finish_at(count, -1), live_until(count, -1);
  std::vector<bool> dup(count, false);
  std::vector<const Block*> block_of(count, nullptr);
  blocks.reserve(post.size());

  for (int v : post) {
    const NodeAnnotation& a = annotated.at(v);
    try {
      blocks.push_back(build_block(a.op, a.input_domain, config.grid, config.quad_degree, config.quad_grid));
    } catch (const std::invalid_argument& e) {
      throw CompileError("node " + std::to_string(v) + " (" + std::string(op_name(a.op)) + "): " + e.what());
    }
    const auto& ch = nodes[v].children;
    dup[v] = ch.size() == 2 && nodes[ch[0]].leaf && nodes[ch[1]].leaf && nodes[ch[0]].coord == nodes[ch[1]].coord;
  }
  for (std::size_t i = 0; i < post.size(); ++i) block_of[post[i]] = &blocks[i];

  // A block reading the same coordinate twice needs a copy neuron made one
  // layer earlier; for the very first block that means a fan-out layer.
  int layer = dup[post.front()] ? 1 : 0;
  for (int v : post) {
    start[v] = layer;
    layer += block_of[v]->c_op;
    finish_at[v] = layer;
  }
  const int L = layer;
  for (int v : post) live_until[v] = nodes[v].parent < 0 ? L : start[nodes[v].parent];

  auto consumed_tags = [&](int v) {
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < nodes[v].children.size(); ++i) {
      const int c = nodes[v].children[i];
      if (!nodes[c].leaf) {
        tags.push_back(node_tag(c));
      } else {
        tags.push_back(i == 1 && dup[v] ? copy_tag(nodes[c].coord) : input_tag(nodes[c].coord));
      }
    }
    return tags;
  };
  auto boundary_tags = [&](int v, int k) {
    const Block& blk = *block_of[v];
    if (k == 0) return consumed_tags(v);
    if (k == blk.c_op) return std::vector<std::string>{node_tag(v)};
    std::vector<std::string> tags;
    for (const auto& name : blk.internal_names[k - 1]) tags.push_back(internal_tag(v, name));
    return tags;
  };

  LayerBuilder b(L + 1);
  for (int l = 0; l <= L; ++l) {
    for (int p = 1; p <= n; ++p) b.neuron(l, input_tag(p));
    for (int u : post) {
      if (finish_at[u] <= l && l <= live_until[u]) b.neuron(l, node_tag(u));
    }
    for (int v : post) {
      if (dup[v] && start[v] == l) b.neuron(l, copy_tag(nodes[nodes[v].children[0]].coord));
    }
    for (int v : post) {
      if (start[v] < l && l < finish_at[v]) {
        for (const auto& t : boundary_tags(v, l - start[v])) b.neuron(l, t);
      }
    }
  }

  std::vector<ScheduleEntry> schedule;
  for (int l = 0; l < L; ++l) {
    for (int p = 1; p <= n; ++p) b.edge(l, input_tag(p), input_tag(p), wire(kUnitInterval, input_tag(p)));
    for (int u : post) {
      if (finish_at[u] <= l && l < live_until[u]) {
        b.edge(l, node_tag(u), node_tag(u), wire(annotated.ranges[u], node_tag(u)));
      }
    }
    for (int v : post) {
      if (dup[v] && start[v] == l + 1) {
        const int p = nodes[nodes[v].children[0]].coord;
        b.edge(l, input_tag(p), copy_tag(p), wire(kUnitInterval, copy_tag(p)));
      }
    }
    for (int v : post) {
      if (start[v] <= l && l < finish_at[v]) {
        const int k = l - start[v];
        const auto from = boundary_tags(v, k);
        const auto to = boundary_tags(v, k + 1);
        for (const Edge& e : block_of[v]->layers[k].edges) b.edge(l, from[e.from], to[e.to], e.phi);
      }
    }
  }
  for (int v : post) {
    schedule.push_back({v, nodes[v].op, start[v], block_of[v]->c_op, consumed_tags(v), node_tag(v)});
  }

  const int output = b.find(L, node_tag(0));
  KanNetwork net = b.finish(output, std::move(meta));
  if (!config.faithful_widths) net = dead_wire_elimination(net);

  cert.L = net.depth();
  cert.widths = net.widths();
  bool has_trig = false;
  for (std::size_t i = 0; i < post.size(); ++i) {
    const int v = post[i];
    const Block& blk = blocks[i];
    const NodeAnnotation& a = annotated.at(v);
    cert.w_max = std::max(cert.w_max, blk.w_op);
    cert.eps_op = std::max(cert.eps_op, blk.eps_op);
    has_trig = has_trig || blk.op == OpKind::Sin || blk.op == OpKind::Cos;
    cert.per_node.push_back({v, a.op, a.range, a.input_domain, a.partial_lips, start[v], blk.c_op, blk.w_op,
                             block_certificate(blk)});
  }
  cert.width_bound = cert.n + 2 * cert.w_max * cert.N;
  cert.width_bound_w4 = cert.n + 8 * cert.N;
  cert.error_bound = cert.N * std::pow(std::max(cert.c_tree, 1.0), cert.depth) * cert.eps_op;
  // Sin/cos blocks are piecewise-linear interpolants, so their error decays like h^2.
  cert.rate_exponent = has_trig ? 2 : 0;
  return {std::move(net), std::move(cert), std::move(schedule), std::move(annotated), std::move(blocks)};
}

Compiled compile_on_box(const CompTree& tree, const AffineBox& box, const CompileConfig& config) {
  Compiled c = compile(tree, config);
  const int n = c.net.input_dim();
  if (static_cast<int>(box.dim()) != n) {
    throw CompileError("box has " + std::to_string(box.dim()) + " coordinates, the tree needs " + std::to_string(n));
  }
  for (const Interval& iv : box.intervals) {
    if (iv.degenerate()) throw CompileError("degenerate box interval");
  }
  std::vector<int> widths{n};
  widths.insert(widths.end(), c.net.widths().begin(), c.net.widths().end());
  std::vector<std::vector<Edge>> layers(1);
  for (int p = 0; p < n; ++p) {
    const Interval& iv = box.intervals[p];
    layers[0].push_back({p, p, Spline(1, {iv.lo, iv.hi}, {0.0, 1.0})});
  }
  layers.insert(layers.end(), c.net.layers().begin(), c.net.layers().end());
  std::vector<std::vector<std::string>> tags;
  tags.emplace_back();
  for (int p = 1; p <= n; ++p) tags.back().push_back(input_tag(p));
  tags.insert(tags.end(), c.net.wire_tags().begin(), c.net.wire_tags().end());
  for (auto& t : tags[1]) {
    if (starts_with(t, "input:")) t = "unit:" + t.substr(6);
  }
  Json meta = c.net.meta();
  Json jb = Json::array();
  for (const Interval& iv : box.intervals) jb.push_back(interval_json(iv));
  meta["box"] = std::move(jb);
  c.net = KanNetwork(std::move(widths), std::move(layers), std::move(tags), c.net.output(), std::move(meta));

  c.cert.box = box;
  c.cert.box_factor = std::max(box.lip_h_inv, 1.0);
  c.cert.p_bound *= c.cert.box_factor;
  c.cert.p_simplified *= c.cert.box_factor;
  c.cert.L = c.net.depth();
  c.cert.widths = c.net.widths();
  return c;
}

KanNetwork dead_wire_elimination(const KanNetwork& net) {
  const int L = net.depth();
  std::vector<std::vector<bool>> live(L + 1);
  live[L].assign(net.widths()[L], false);
  live[L][net.output()] = true;
  for (int l = L - 1; l >= 0; --l) {
    live[l].assign(net.widths()[l], l == 0);
    for (const Edge& e : net.layers()[l]) {
      if (live[l + 1][e.to]) live[l][e.from] = true;
    }
  }
  std::vector<std::vector<int>> remap(L + 1);
  std::vector<int> widths;
  std::vector<std::vector<std::string>> tags;
  for (int l = 0; l <= L; ++l) {
    remap[l].assign(net.widths()[l], -1);
    int next = 0;
    std::vector<std::string> row;
    for (int i = 0; i < net.widths()[l]; ++i) {
      if (!live[l][i]) continue;
      remap[l][i] = next++;
      if (!net.wire_tags().empty()) row.push_back(net.wire_tags()[l][i]);
    }
    widths.push_back(next);
    if (!net.wire_tags().empty()) tags.push_back(std::move(row));
  }
  std::vector<std::vector<Edge>> layers(L);
  for (int l = 0; l < L; ++l) {
    for (const Edge& e : net.layers()[l]) {
      if (live[l][e.from] && live[l + 1][e.to]) layers[l].push_back({remap[l][e.from], remap[l + 1][e.to], e.phi});
    }
  }
  return KanNetwork(std::move(widths), std::move(layers), std::move(tags), remap[L][net.output()], net.meta());
}

std::vector<LayerGroups> layer_groups(const KanNetwork& net) {
  std::vector<LayerGroups> out;
  for (const auto& row : net.wire_tags()) {
    LayerGroups g;
    for (const std::string& t : row) {
      if (starts_with(t, "input:")) {
        ++g.inputs;
      } else if (starts_with(t, "node:")) {
        ++g.live;
      } else if (starts_with(t, "copy:")) {
        ++g.copies;
      } else if (starts_with(t, "internal:")) {
        ++g.internal;
      } else {
        ++g.other;
      }
    }
    out.push_back(g);
  }
  return out;
}

const Check* CheckReport::first_failure() const {
  for (const Check& c : checks) {
    if (!c.ok) return &c;
  }
  return nullptr;
}

CheckReport check_network(const CompTree& tree, const KanNetwork& net, const Certificate& cert,
                          const VerifyConfig& verify) {
  CheckReport r;
  auto add = [&r](std::string name, double lhs, double rhs, bool ok) {
    r.checks.push_back({std::move(name), lhs, rhs, ok});
    r.ok = r.ok && ok;
  };
  Measured& m = r.measured;
  m.samples = verify.samples;
  m.seed = verify.seed;

  const ProductReport pr = lipschitz_product(net);
  m.P = pr.product;
  m.max_width = net.max_width();
  add("n_0 = n", net.input_dim(), cert.n, net.input_dim() == cert.n);
  add("widths = construction", net.widths() == cert.widths ? 1.0 : 0.0, 1.0, net.widths() == cert.widths);
  add("P <= p_bound", m.P, cert.p_bound, m.P <= cert.p_bound);
  add("p_bound <= p_simplified", cert.p_bound, cert.p_simplified, cert.p_bound <= cert.p_simplified);
  add("max width <= n + 2 w_max N", m.max_width, cert.width_bound, m.max_width <= cert.width_bound);
  add("max width <= n + 8N", m.max_width, cert.width_bound_w4, m.max_width <= cert.width_bound_w4);
  add("L_f <= 3N", cert.L_f, 3.0 * cert.N, cert.L_f <= 3 * cert.N);
  for (const NodeCertificate& nc : cert.per_node) {
    add("A5 at node " + std::to_string(nc.node_id), nc.block.lambda_op, nc.block.rhs, nc.block.a5_ok);
  }
  if (net.input_dim() != cert.n) return r;

  const auto pts = kernels::uniform_samples(cert.n, verify.samples, verify.seed, /*include_corners=*/true);
  reset_out_of_domain_hits();
  m.sup_error = cert.box ? kernels::max_abs_error(net, tree, pts, *cert.box) : kernels::max_abs_error(net, tree, pts);
  m.out_of_domain = out_of_domain_hits();
  add("sup error <= N max(C,1)^d eps", m.sup_error, cert.error_bound,
      m.sup_error <= cert.error_bound + verify.error_allowance);

  const AnnotatedTree annotated = annotate_ranges(tree);
  const auto sup = kernels::node_sup_abs(tree, pts);
  m.range_slack_min = std::numeric_limits<double>::infinity();
  bool ranges_ok = true;
  for (std::size_t v = 0; v < sup.size(); ++v) {
    const double slack = annotated.ranges[v].mag() - sup[v];
    m.range_slack_min = std::min(m.range_slack_min, slack);
    ranges_ok = ranges_ok && slack >= -1e-12;
  }
  add("max_v (sup |g_v| - B_v) <= 0", 0.0 - m.range_slack_min, 0.0, ranges_ok);

  if (verify.jacobian_points > 0) {
    const auto inner = kernels::interior_samples(cert.n, verify.jacobian_points, verify.seed + 1, 1e-4);
    for (std::size_t i = 0; i < inner.size(); ++i) {
      const auto t = inner.point(i);
      const auto x = cert.box ? apply_affine(*cert.box, t) : std::vector<double>(t.begin(), t.end());
      m.jacobian_ratio_max = std::max(m.jacobian_ratio_max, jacobian_lower_bound(net, x));
    }
    add("||J||/W^L <= P", m.jacobian_ratio_max, m.P, m.jacobian_ratio_max <= m.P + 1e-6);
  }
  return r;
}

Certificate certify(const CompTree& tree, const KanNetwork& net, const CompileConfig& config,
                    const VerifyConfig& verify, const std::optional<AffineBox>& box) {
  Compiled ref = box ? compile_on_box(tree, *box, config) : compile(tree, config);
  const CheckReport report = check_network(tree, net, ref.cert, verify);
  if (const Check* bad = report.first_failure()) {
    throw CertificationError(bad->name, std::to_string(bad->lhs) + " vs " + std::to_string(bad->rhs));
  }
  ref.cert.measured = report.measured;
  return std::move(ref.cert);
}

Json certificate_to_json(const Certificate& c) {
  Json j;
  j["tool"] = "kanforge";
  j["version"] = std::string(version());
  j["expr"] = c.expr;
  j["expr_hash"] = c.expr_hash;
  j["config"] = config_json(c.config);
  j["n"] = c.n;
  j["N"] = c.N;
  j["depth"] = c.depth;
  j["sparsity"] = c.sparsity;
  j["L_f"] = c.L_f;
  j["L"] = c.L;
  j["widths"] = c.widths;
  j["p_bound"] = c.p_bound;
  j["p_simplified"] = c.p_simplified;
  j["c_star"] = c.c_star;
  j["w_max"] = c.w_max;
  j["width_bound"] = c.width_bound;
  j["width_bound_w4"] = c.width_bound_w4;
  j["eps_op"] = c.eps_op;
  j["c_tree"] = c.c_tree;
  j["error_bound"] = c.error_bound;
  j["rate_exponent"] = c.rate_exponent;
  if (c.box) {
    Json jb = Json::array();
    for (const Interval& iv : c.box->intervals) jb.push_back(interval_json(iv));
    j["box"] = {{"intervals", std::move(jb)}, {"lip_h", c.box->lip_h}, {"lip_h_inv", c.box->lip_h_inv},
                {"factor", c.box_factor}};
  }
  Json nodes = Json::array();
  for (const NodeCertificate& nc : c.per_node) {
    Json dom = Json::array();
    for (const Interval& d : nc.input_domain) dom.push_back(interval_json(d));
    nodes.push_back({{"id", nc.node_id},
                     {"op", std::string(op_name(nc.op))},
                     {"range", interval_json(nc.range)},
                     {"input_domain", std::move(dom)},
                     {"partial_lips", nc.partial_lips},
                     {"C", nc.block.C},
                     {"start_layer", nc.start_layer},
                     {"c_op", nc.c_op},
                     {"w_op", nc.w_op},
                     {"lambda_op", nc.block.lambda_op},
                     {"eps_op", nc.block.eps_op},
                     {"a5_rhs", nc.block.rhs},
                     {"a5_ok", nc.block.a5_ok}});
  }
  j["per_node"] = std::move(nodes);
  if (c.measured) {
    const Measured& m = *c.measured;
    j["measured"] = {{"P", m.P},
                     {"max_width", m.max_width},
                     {"sup_error", m.sup_error},
                     {"jacobian_ratio_max", m.jacobian_ratio_max},
                     {"range_slack_min", m.range_slack_min},
                     {"out_of_domain", m.out_of_domain},
                     {"samples", m.samples},
                     {"seed", m.seed}};
  }
  return j;
}

Json annotations_to_json(const AnnotatedTree& annotated) {
  Json nodes = Json::array();
  for (std::size_t id = 0; id < annotated.nodes.size(); ++id) {
    const FlatNode& nd = annotated.nodes[id];
    if (nd.leaf) {
      nodes.push_back({{"id", id}, {"leaf", nd.coord}, {"range", interval_json(annotated.ranges[id])}});
      continue;
    }
    const NodeAnnotation& a = annotated.at(static_cast<int>(id));
    Json dom = Json::array();
    for (const Interval& d : a.input_domain) dom.push_back(interval_json(d));
    nodes.push_back({{"id", id},
                     {"op", std::string(op_name(a.op))},
                     {"range", interval_json(a.range)},
                     {"input_domain", std::move(dom)},
                     {"partial_lips", a.partial_lips},
                     {"c_op", a.c_op}});
  }
  return {{"expr", render(annotated.tree)}, {"nodes", std::move(nodes)}};
}

}  // namespace kanforge
