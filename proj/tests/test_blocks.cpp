#include <doctest.h>

#include <cmath>
#include <random>

#include "kanforge/blocks.hpp"
#include "kanforge/commands.hpp"
#include "kanforge/network.hpp"
#include "kanforge/range.hpp"

using namespace kanforge;

namespace {

// lambda recomputed from the edges: product over layers of the largest edge constant.
double layer_product(const Block& b) {
  double p = 1.0;
  for (const auto& layer : b.layers) {
    double mu = 0.0;
    for (const auto& e : layer.edges) mu = std::max(mu, spline_lipschitz(e.phi).value);
    p *= mu;
  }
  return p;
}

double exact_op(OpKind op, double a, double b) {
  switch (op) {
    case OpKind::Add: return a + b;
    case OpKind::Sub: return a - b;
    case OpKind::Mul: return a * b;
    case OpKind::Relu: return a > 0 ? a : 0;
    case OpKind::Abs: return a < 0 ? -a : a;
    case OpKind::Sin: return std::sin(a);
    default: return std::cos(a);
  }
}

}  // namespace

TEST_CASE("add and sub blocks") {
  const Block add = block_add({0, 1}, {0, 1});
  const double in[] = {0.3, 0.4};
  CHECK(add.evaluate(in) == 0.3 + 0.4);
  CHECK(add.lambda_op == 1.0);
  CHECK(add.c_op == 1);
  CHECK(add.eps_op == 0.0);
  const Block sub = block_sub({0, 1}, {0, 1});
  CHECK(sub.evaluate(in) == 0.3 - 0.4);
  CHECK(sub.output_range == Interval{-1, 1});
  CHECK(sub.lambda_op == 1.0);
}

TEST_CASE("trig blocks") {
  const Block s = block_trig(OpKind::Sin, {0, 1}, 35);
  CHECK(s.c_op == 1);
  CHECK(s.eps_op <= std::pow(1.0 / 34, 2) / 8);
  CHECK(s.eps_op == doctest::Approx(std::pow(1.0 / 34, 2) / 8 * std::sin(1.0)).epsilon(1e-12));
  CHECK(s.lambda_op <= 1.0);
  for (int G : {2, 5, 35}) CHECK(block_trig(OpKind::Cos, {0, 1}, G).lambda_op <= 1.0);
  const Block sm = block_trig(OpKind::Sin, {-1, 1}, 35);
  CHECK(sm.lambda_op <= 1.0);
  CHECK(block_certificate(sm).a5_ok);
  CHECK_THROWS(block_trig(OpKind::Sin, {0, 1}, 1));
}

TEST_CASE("mul blocks") {
  const Block m = block_mul({0, 1}, {0, 1});
  CHECK(m.c_op == 3);
  CHECK(m.w_op == 2);
  CHECK(m.neuron_ranges[1][0] == Interval{0, 2});
  CHECK(m.neuron_ranges[1][1] == Interval{-1, 1});
  double lips[2] = {0, 0};
  for (const auto& e : m.layers[1].edges) lips[e.from] = std::max(lips[e.from], spline_lipschitz(e.phi).value);
  CHECK(lips[0] == 1.0);
  CHECK(lips[1] == 0.5);
  CHECK(m.lambda_op == 1.0);
  const double half[] = {0.5, 0.5};
  CHECK(m.evaluate(half) == 0.25);

  // exact for dyadic reach; otherwise the squaring grid 2B/3 rounds
  for (double B : {0.5, 2.0, 4.0, 3.0}) CHECK(block_mul({0, B}, {0, B}).lambda_op == B);
  CHECK(block_mul({0, 7.0}, {0, 7.0}).lambda_op == doctest::Approx(7.0).epsilon(1e-15).scale(0));
  const Block m2 = block_mul({0, 2}, {0, 2});
  const double two[] = {2, 2};
  CHECK(m2.evaluate(two) == 4.0);
  // signed domains: half the widest reach of u+v and u-v
  const Block ms = block_mul({-1, 2}, {-3, 1});
  CHECK(ms.lambda_op == 2.5);
}

TEST_CASE("relu and abs blocks") {
  const Block r = block_pwl(OpKind::Relu, {-1, 1});
  const double m5[] = {-0.5}, p5[] = {0.5};
  CHECK(r.evaluate(m5) == 0.0);
  CHECK(r.evaluate(p5) == 0.5);
  CHECK(block_pwl(OpKind::Abs, {-1, 1}).lambda_op == 1.0);
  const Block r01 = block_pwl(OpKind::Relu, {0, 1});
  const double t[] = {0.3};
  CHECK(r01.evaluate(t) == 0.3);
  CHECK(r01.layers[0].edges[0].phi.grid_points() == 2);
}

TEST_CASE("block certificates") {
  const auto c = block_certificate(block_mul({0, 1}, {0, 1}));
  CHECK(c.lambda_op == 1.0);
  CHECK(c.eps_op == 0.0);
  CHECK(c.a5_ok);
  const auto c2 = block_certificate(block_mul({0, 2}, {0, 2}));
  CHECK(c2.lambda_op == 2.0);
  CHECK(c2.C == 2.0);
  CHECK(c2.rhs == 8.0);
  CHECK(c2.a5_ok);
  const auto ct = block_certificate(block_trig(OpKind::Sin, {0, 1}, 5));
  CHECK(ct.lambda_op <= 1.0);
  CHECK(ct.eps_op <= 0.25 * 0.25 / 8);
  CHECK(ct.a5_ok);
}

TEST_CASE("degenerate domains are rejected") {
  const Interval d[] = {Interval{1, 1}, Interval{0, 1}};
  CHECK_THROWS_AS(build_block(OpKind::Mul, d, 35), std::invalid_argument);
}

TEST_CASE("property: exact blocks reproduce their operation") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> lo(-3.0, 1.0), len(0.1, 4.0), u(0.0, 1.0);
  const OpKind ops[] = {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Relu, OpKind::Abs};
  for (OpKind op : ops) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<Interval> dom;
      for (int i = 0; i < arity(op); ++i) {
        const double a = rep == 0 ? 0.0 : lo(rng);
        dom.emplace_back(a, rep == 0 ? 1.0 : a + len(rng));
      }
      const Block b = build_block(op, dom, 35);
      CHECK(b.eps_op == 0.0);
      double worst = 0.0;
      for (int s = 0; s < 1000; ++s) {
        std::vector<double> x;
        for (const auto& d : dom) x.push_back(d.lo + u(rng) * d.width());
        worst = std::max(worst, std::fabs(b.evaluate(x) - exact_op(op, x[0], x.size() > 1 ? x[1] : 0.0)));
      }
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("property: lambda equals the product of layer maxima") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> lo(-3.0, 1.0), len(0.1, 4.0);
  for (OpKind op : kAllOps) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<Interval> dom;
      for (int i = 0; i < arity(op); ++i) {
        const double a = lo(rng);
        dom.emplace_back(a, a + len(rng));
      }
      const Block b = build_block(op, dom, 2 + rep);
      CHECK(b.lambda_op == layer_product(b));
      // the block as a standalone network has the same product
      std::vector<int> widths{b.layers.front().width_in};
      std::vector<std::vector<Edge>> layers;
      std::vector<std::vector<std::string>> tags;
      for (const auto& l : b.layers) {
        widths.push_back(l.width_out);
        layers.push_back(l.edges);
      }
      for (int w : widths) tags.emplace_back(w, "internal:0:x");
      const KanNetwork net(widths, layers, tags, 0);
      CHECK(lipschitz_product(net).product == b.lambda_op);
    }
  }
}

TEST_CASE("property: trig error within h^2/8") {
  for (OpKind op : {OpKind::Sin, OpKind::Cos}) {
    for (int G : {2, 5, 12, 35}) {
      const Block b = block_trig(op, {0, 1}, G);
      const double h = 1.0 / (G - 1);
      const auto f = [op](double t) { return op == OpKind::Sin ? std::sin(t) : std::cos(t); };
      const double err = sup_error(f, b.layers[0].edges[0].phi, 100000);
      CHECK(err <= h * h / 8 + 1e-12);
      CHECK(err <= b.eps_op + 1e-12);
    }
  }
}

TEST_CASE("property: A5 on random and tree-derived domains") {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> lo(-5.0, 5.0), len(1e-3, 10.0);
  for (OpKind op : kAllOps) {
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<Interval> dom;
      for (int i = 0; i < arity(op); ++i) {
        const double a = lo(rng);
        dom.emplace_back(a, a + len(rng));
      }
      CHECK(block_certificate(build_block(op, dom, 35)).a5_ok);
    }
  }
  for (int B = 1; B <= 32; ++B) {
    const auto c = block_certificate(block_mul({0, double(B)}, {0, double(B)}));
    CHECK(c.a5_ok);
    CHECK(c.lambda_op == doctest::Approx(B).epsilon(1e-15).scale(0));
  }
  std::mt19937_64 trees(5);
  for (int i = 0; i < 200; ++i) {
    const CompTree t = random_tree(trees);
    const auto a = annotate_ranges(t);
    for (const auto& n : a.annotations) {
      CHECK(block_certificate(build_block(n.op, n.input_domain, 35)).a5_ok);
    }
  }
}

TEST_CASE("block JSON") {
  const Json j = block_to_json(block_mul({0, 1}, {0, 1}));
  CHECK(j["op"] == "mul");
  CHECK(j["c_op"] == 3);
  CHECK(j["lambda_op"] == 1.0);
  CHECK(j["layers"].size() == 3);
}
