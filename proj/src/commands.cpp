#include "kanforge/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "kanforge/spline.hpp"

namespace kanforge {

void RunConfig::validate() const {
  if (grid < 2) throw std::invalid_argument("--grid must be >= 2");
  if (order < 2) throw std::invalid_argument("--order must be >= 2");
  if (samples < 1) throw std::invalid_argument("--samples must be >= 1");
}

CompileConfig RunConfig::compile_config() const {
  CompileConfig c;
  c.grid = grid;
  c.order = order;
  c.faithful_widths = faithful_widths;
  return c;
}

VerifyConfig RunConfig::verify_config() const {
  VerifyConfig v;
  v.samples = samples;
  v.seed = seed;
  return v;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("KANFORGE_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  return *end == '\0' ? v : fallback;
}

std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Table::to_csv() const {
  std::ostringstream os;
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const bool quote = row[c].find(',') != std::string::npos;
      os << (c ? "," : "") << (quote ? "\"" + row[c] + "\"" : row[c]);
    }
    os << '\n';
  }
  return os.str();
}

std::string Table::to_text() const {
  std::vector<std::size_t> w(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) w[c] = columns[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], row[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << (c ? "  " : "") << cells[c];
      if (c + 1 < cells.size()) os << std::string(w[c] - cells[c].size(), ' ');
    }
    os << '\n';
  };
  line(columns);
  for (const auto& row : rows) line(row);
  return os.str();
}

Json Table::to_json() const {
  Json out = Json::array();
  for (const auto& row : rows) {
    Json obj = Json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) obj[columns[c]] = row[c];
    out.push_back(std::move(obj));
  }
  return out;
}

std::vector<ProductRow> table_products(const RunConfig& config) {
  config.validate();
  CompileConfig cc = config.compile_config();
  cc.faithful_widths = true;
  std::vector<std::string> exprs = {"x1*x2", "x1*x2*x3", "sin(x1*x2)"};
  for (int n = 2; n <= 10; ++n) {
    std::string e = "x1";
    for (int p = 2; p <= n; ++p) e += "*x" + std::to_string(p);
    exprs.push_back(e);
  }
  std::vector<ProductRow> rows;
  for (const auto& e : exprs) {
    const CompTree tree = parse_expression(e);
    const Compiled c = compile(tree, cc);
    rows.push_back({c.cert.expr, c.cert.n, c.cert.N, lipschitz_product(c.net).product, c.cert.p_bound});
  }
  return rows;
}

Table product_table(const std::vector<ProductRow>& rows) {
  Table t{{"f", "n", "N", "P_measured", "P_bound"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.f, std::to_string(r.n), std::to_string(r.N), format_exact(r.P_measured), format_exact(r.P_bound)});
  }
  return t;
}

RateSweep sweep_rate(const RunConfig& config, FitMethod fit, const std::vector<int>& grids) {
  config.validate();
  if (fit == FitMethod::Interpolate && config.order != 3) {
    throw std::invalid_argument("interpolating fits are cubic; use --order 3 or --fit lsq");
  }
  const auto f = [](double t) { return std::sin(t); };
  RateSweep sweep;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int G : grids) {
    const Spline s = fit == FitMethod::Interpolate ? cubic_interpolant(f, 0.0, 1.0, G)
                                                   : lsq_fit(f, 0.0, 1.0, config.order, G);
    RateRow r;
    r.G = G;
    r.error = sup_error(f, s, config.samples);
    const double h = 1.0 / (G - 1);
    r.h4 = std::pow(h, config.order + 1);
    r.ratio = r.error / r.h4;
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
    sweep.rows.push_back(r);
  }
  sweep.spread = hi / lo;
  sweep.constant = sweep.spread < 2.0;
  return sweep;
}

Table rate_table(const RateSweep& sweep) {
  Table t{{"G", "error", "h^4", "ratio"}, {}};
  for (const auto& r : sweep.rows) {
    t.rows.push_back({std::to_string(r.G), format_exact(r.error), format_exact(r.h4), format_exact(r.ratio)});
  }
  return t;
}

namespace {

CompTree random_subtree(std::mt19937_64& rng, int depth, int max_depth, int max_coord) {
  static constexpr OpKind kOps[] = {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Sin, OpKind::Cos};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> coord(1, max_coord);
  std::uniform_int_distribution<int> pick(0, 4);
  const bool leaf = depth >= max_depth || (depth > 0 && u(rng) < static_cast<double>(depth) / max_depth);
  if (leaf) return CompTree::leaf(coord(rng));
  const OpKind op = kOps[pick(rng)];
  std::vector<CompTree> children;
  for (int i = 0; i < arity(op); ++i) children.push_back(random_subtree(rng, depth + 1, max_depth, max_coord));
  return CompTree::node(op, std::move(children));
}

CompTree additive_subtree(int depth, int& next_coord) {
  if (depth == 0) return CompTree::leaf(next_coord++);
  CompTree lhs = additive_subtree(depth - 1, next_coord);
  CompTree rhs = additive_subtree(depth - 1, next_coord);
  return CompTree::binary(OpKind::Add, std::move(lhs), std::move(rhs));
}

}  // namespace

CompTree random_tree(std::mt19937_64& rng, int max_depth, int max_coord) {
  if (max_depth < 1 || max_coord < 1) throw std::invalid_argument("random_tree: max_depth and max_coord must be >= 1");
  return random_subtree(rng, 0, max_depth, max_coord);
}

CompTree additive_tree(int depth) {
  int next = 1;
  return additive_subtree(depth, next);
}

bool FuzzReport::ok() const {
  return failures.empty() && std::all_of(additive.begin(), additive.end(), [](const AdditiveCheck& a) { return a.ok; });
}

FuzzReport run_fuzz(const RunConfig& config, int count, int max_depth) {
  config.validate();
  if (count < 1) throw std::invalid_argument("fuzz: count must be >= 1");
  FuzzReport report;
  std::mt19937_64 rng(config.seed);
  const CompileConfig cc = config.compile_config();
  VerifyConfig vc = config.verify_config();
  for (int i = 0; i < count; ++i) {
    const CompTree tree = random_tree(rng, max_depth);
    ++report.trees;
    vc.seed = config.seed + static_cast<std::uint64_t>(i) + 1;
    try {
      const Compiled c = compile(tree, cc);
      const CheckReport r = check_network(tree, c.net, c.cert, vc);
      if (const Check* bad = r.first_failure()) {
        report.failures.push_back({i, render(tree), bad->name + ": " + format_exact(bad->lhs) + " vs " +
                                                        format_exact(bad->rhs)});
        continue;
      }
      ++report.passed;
    } catch (const std::exception& e) {
      report.failures.push_back({i, render(tree), e.what()});
    }
  }
  for (int d = 1; d <= max_depth; ++d) {
    const CompTree tree = additive_tree(d);
    const AnnotatedTree a = annotate_ranges(tree);
    const TreeStats st = tree_stats(tree);
    const std::vector<double> ones(st.n, 1.0);
    AdditiveCheck chk{d, st.N, a.root_range().mag(), eval_tree(tree, ones), false};
    chk.ok = chk.certified == st.N + 1 && std::fabs(chk.measured - (st.N + 1)) <= 1e-12;
    report.additive.push_back(chk);
  }
  return report;
}

}  // namespace kanforge
