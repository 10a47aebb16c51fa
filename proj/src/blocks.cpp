#include "kanforge/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kanforge/range.hpp"

namespace kanforge {

namespace {

void require_domain(const Interval& d, OpKind op) {
  if (d.degenerate()) {
    throw std::invalid_argument(std::string("degenerate domain [") + std::to_string(d.lo) + ", " +
                                std::to_string(d.hi) + "] for a " + std::string(op_name(op)) + " block");
  }
}

Interval square_quarter(const Interval& t) {
  const double lo2 = t.lo * t.lo / 4.0;
  const double hi2 = t.hi * t.hi / 4.0;
  if (t.lo >= 0.0) return {lo2, hi2};
  if (t.hi <= 0.0) return {hi2, lo2};
  return {0.0, std::max(lo2, hi2)};
}

void finish(Block& b) {
  b.c_op = static_cast<int>(b.layers.size());
  b.w_op = 0;
  for (const auto& r : b.neuron_ranges) b.w_op = std::max(b.w_op, static_cast<int>(r.size()));
  b.lambda_op = 1.0;
  for (const BlockLayer& layer : b.layers) {
    std::vector<double> m(layer.width_in, 0.0);
    for (const Edge& e : layer.edges) m[e.from] = std::max(m[e.from], spline_lipschitz(e.phi).value);
    b.lambda_op *= *std::max_element(m.begin(), m.end());
  }
  b.output_range = b.neuron_ranges.back().front();
}

Block binary_linear(OpKind op, const Interval& u, const Interval& v) {
  require_domain(u, op);
  require_domain(v, op);
  Block b;
  b.op = op;
  b.input_domain = {u, v};
  const double sign = op == OpKind::Sub ? -1.0 : 1.0;
  b.layers.push_back({2, 1, {{0, 0, Spline::identity(u)}, {1, 0, Spline::linear(v, sign, 0.0)}}});
  const Interval dom[] = {u, v};
  b.neuron_ranges = {{u, v}, {range_rule(op, dom)}};
  finish(b);
  return b;
}

}  // namespace

double Block::evaluate(std::span<const double> inputs) const {
  if (static_cast<int>(inputs.size()) != layers.front().width_in) {
    throw std::invalid_argument("Block::evaluate: wrong input count");
  }
  std::vector<double> cur(inputs.begin(), inputs.end());
  for (const BlockLayer& layer : layers) {
    std::vector<double> next(layer.width_out, 0.0);
    for (const Edge& e : layer.edges) next[e.to] += e.phi(cur[e.from]);
    cur = std::move(next);
  }
  return cur.front();
}

Block block_add(const Interval& u, const Interval& v) { return binary_linear(OpKind::Add, u, v); }
Block block_sub(const Interval& u, const Interval& v) { return binary_linear(OpKind::Sub, u, v); }

Block block_trig(OpKind op, const Interval& domain, int G) {
  if (op != OpKind::Sin && op != OpKind::Cos) throw std::invalid_argument("block_trig: op must be sin or cos");
  require_domain(domain, op);
  Block b;
  b.op = op;
  b.input_domain = {domain};
  const auto f = [op](double t) { return op == OpKind::Sin ? std::sin(t) : std::cos(t); };
  b.layers.push_back({1, 1, {{0, 0, pl_interpolant(f, domain.lo, domain.hi, G)}}});
  const Interval dom[] = {domain};
  const Interval image = range_rule(op, dom);
  b.neuron_ranges = {{domain}, {image}};
  // |f''| = |f| for sin and cos, so sup |f''| on the domain is the image magnitude.
  const double h = domain.width() / (G - 1);
  b.eps_op = h * h / 8.0 * image.mag();
  finish(b);
  return b;
}

Block block_mul(const Interval& u, const Interval& v, int degree, int grid) {
  require_domain(u, OpKind::Mul);
  require_domain(v, OpKind::Mul);
  if (degree < 2) throw std::invalid_argument("block_mul: squares need spline degree >= 2");
  Block b;
  b.op = OpKind::Mul;
  b.input_domain = {u, v};
  const Interval uv[] = {u, v};
  const Interval a = range_rule(OpKind::Add, uv);
  const Interval d = range_rule(OpKind::Sub, uv);
  const Interval p = square_quarter(a);
  const Interval q = square_quarter(d);
  const double quarter_square[] = {0.0, 0.0, 0.25};

  b.layers.push_back({2, 2,
                      {{0, 0, Spline::identity(u)},
                       {0, 1, Spline::identity(u)},
                       {1, 0, Spline::identity(v)},
                       {1, 1, Spline::linear(v, -1.0, 0.0)}}});
  b.layers.push_back({2, 2,
                      {{0, 0, exact_poly_spline(quarter_square, a.lo, a.hi, degree, grid)},
                       {1, 1, exact_poly_spline(quarter_square, d.lo, d.hi, degree, grid)}}});
  b.layers.push_back({2, 1, {{0, 0, Spline::identity(p)}, {1, 0, Spline::linear(q, -1.0, 0.0)}}});
  b.neuron_ranges = {{u, v}, {a, d}, {p, q}, {range_rule(OpKind::Mul, uv)}};
  b.internal_names = {{"a", "b"}, {"p", "q"}};
  finish(b);
  return b;
}

Block block_pwl(OpKind op, const Interval& domain) {
  if (op != OpKind::Relu && op != OpKind::Abs) throw std::invalid_argument("block_pwl: op must be relu or abs");
  require_domain(domain, op);
  Block b;
  b.op = op;
  b.input_domain = {domain};
  const auto f = [op](double t) { return op == OpKind::Relu ? std::max(t, 0.0) : std::fabs(t); };
  Spline s = domain.lo < 0.0 && domain.hi > 0.0
                 ? piecewise_linear({domain.lo, 0.0, domain.hi}, {f(domain.lo), 0.0, f(domain.hi)})
                 : piecewise_linear({domain.lo, domain.hi}, {f(domain.lo), f(domain.hi)});
  b.layers.push_back({1, 1, {{0, 0, std::move(s)}}});
  const Interval dom[] = {domain};
  b.neuron_ranges = {{domain}, {range_rule(op, dom)}};
  finish(b);
  return b;
}

Block build_block(OpKind op, std::span<const Interval> domain, int grid, int quad_degree, int quad_grid) {
  if (static_cast<int>(domain.size()) != arity(op)) throw std::invalid_argument("build_block: arity mismatch");
  switch (op) {
    case OpKind::Add:
      return block_add(domain[0], domain[1]);
    case OpKind::Sub:
      return block_sub(domain[0], domain[1]);
    case OpKind::Mul:
      return block_mul(domain[0], domain[1], quad_degree, quad_grid);
    case OpKind::Sin:
    case OpKind::Cos:
      return block_trig(op, domain[0], grid);
    case OpKind::Relu:
    case OpKind::Abs:
      return block_pwl(op, domain[0]);
  }
  throw std::invalid_argument("build_block: unsupported op");
}

BlockCertificate block_certificate(const Block& b) {
  BlockCertificate c;
  c.lambda_op = b.lambda_op;
  c.eps_op = b.eps_op;
  for (double l : partial_lip(b.op, b.input_domain)) c.C = std::max(c.C, l);
  c.rhs = std::pow(std::max(c.C, 1.0), b.c_op);
  c.a5_ok = b.lambda_op <= c.rhs;
  return c;
}

Json block_to_json(const Block& b) {
  Json j;
  j["op"] = std::string(op_name(b.op));
  j["c_op"] = b.c_op;
  j["w_op"] = b.w_op;
  j["lambda_op"] = b.lambda_op;
  j["eps_op"] = b.eps_op;
  Json dom = Json::array();
  for (const Interval& d : b.input_domain) dom.push_back({d.lo, d.hi});
  j["input_domain"] = std::move(dom);
  j["output_range"] = {b.output_range.lo, b.output_range.hi};
  Json layers = Json::array();
  for (const BlockLayer& layer : b.layers) {
    Json edges = Json::array();
    for (const Edge& e : layer.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"spline", spline_to_json(e.phi)}});
    layers.push_back({{"width_in", layer.width_in}, {"width_out", layer.width_out}, {"edges", std::move(edges)}});
  }
  j["layers"] = std::move(layers);
  return j;
}

}  // namespace kanforge
