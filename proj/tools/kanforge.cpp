// kanforge: compile expressions into KANs, verify certificates, reproduce tables.
//
// Exit codes: 0 every certified inequality holds, 1 an inequality is
// violated, 2 bad input (syntax, schema, I/O), 3 expression hash mismatch.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kanforge/commands.hpp"
#include "kanforge/compiler.hpp"

namespace fs = std::filesystem;
using namespace kanforge;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;
constexpr int kExitHash = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

CompTree parse_or_report(const std::string& text) {
  try {
    return parse_expression(text);
  } catch (const ParseError& e) {
    throw InputError(std::string("parse error: ") + e.what());
  }
}

// "a1:b1,a2:b2,..."
AffineBox parse_box(const std::string& text) {
  std::vector<Interval> iv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InputError("box entries look like a:b, got '" + item + "'");
    try {
      iv.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw InputError("bad box interval '" + item + "'");
    }
  }
  try {
    return affine_box(std::move(iv));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

std::string render_table(const Table& t, const std::string& format) {
  if (format == "csv") return t.to_csv();
  if (format == "json") return t.to_json().dump(2) + "\n";
  return t.to_text();
}

Table check_table(const CheckReport& r) {
  Table t{{"check", "measured", "certified", "ok"}, {}};
  for (const Check& c : r.checks) t.rows.push_back({c.name, format_exact(c.lhs), format_exact(c.rhs), c.ok ? "yes" : "NO"});
  return t;
}

Json check_json(const CheckReport& r) {
  Json checks = Json::array();
  for (const Check& c : r.checks) checks.push_back({{"check", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"ok", c.ok}});
  return {{"ok", r.ok}, {"checks", std::move(checks)}};
}

Table summary_table(const Certificate& c) {
  Table t{{"field", "value"}, {}};
  auto row = [&t](std::string k, std::string v) { t.rows.push_back({std::move(k), std::move(v)}); };
  std::string widths;
  for (std::size_t l = 0; l < c.widths.size(); ++l) widths += (l ? "," : "") + std::to_string(c.widths[l]);
  row("expr", c.expr);
  row("n", std::to_string(c.n));
  row("N", std::to_string(c.N));
  row("depth", std::to_string(c.depth));
  row("L", std::to_string(c.L));
  row("L_f", std::to_string(c.L_f));
  row("widths", widths);
  if (c.measured) row("P", format_exact(c.measured->P));
  row("p_bound", format_exact(c.p_bound));
  row("p_simplified", format_exact(c.p_simplified));
  row("width_bound", std::to_string(c.width_bound));
  row("eps_op", format_exact(c.eps_op));
  row("error_bound", format_exact(c.error_bound));
  if (c.measured) row("sup_error", format_exact(c.measured->sup_error));
  return t;
}

struct Common {
  RunConfig run;
  std::string format = "table";
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool sampling) {
  cmd->add_option("--grid", c.run.grid, "sin/cos grid points G")->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--order", c.run.order, "spline degree k")->check(CLI::Range(2, 15));
  if (sampling) {
    cmd->add_option("--samples", c.run.samples, "verification samples")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", c.run.seed, "RNG seed (KANFORGE_SEED overrides)");
  }
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv", "table"}));
  cmd->add_option("-o,--out", c.out, "output path");
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

int cmd_compile(const std::string& expr, const std::string& box_text, Common& c) {
  const CompTree tree = parse_or_report(expr);
  const CompileConfig cc = c.run.compile_config();
  std::optional<AffineBox> box;
  if (!box_text.empty()) box = parse_box(box_text);
  Compiled compiled = box ? compile_on_box(tree, *box, cc) : compile(tree, cc);
  const CheckReport report = check_network(tree, compiled.net, compiled.cert, c.run.verify_config());
  compiled.cert.measured = report.measured;

  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  write_file(dir / "network.json", network_to_json(compiled.net).dump(1) + "\n");
  write_file(dir / "certificate.json", certificate_to_json(compiled.cert).dump(2) + "\n");
  write_file(dir / "annotations.json", annotations_to_json(compiled.annotated).dump(2) + "\n");

  if (c.format == "json") {
    std::cout << certificate_to_json(compiled.cert).dump(2) << "\n";
  } else {
    std::cout << render_table(summary_table(compiled.cert), c.format);
  }
  if (const Check* bad = report.first_failure()) {
    std::cerr << "certification failed: " << bad->name << " (" << format_exact(bad->lhs) << " vs "
              << format_exact(bad->rhs) << ")\n";
    return kExitViolation;
  }
  return 0;
}

int cmd_verify(const std::string& in_dir, const std::string& expr, Common& c) {
  const fs::path dir(in_dir);
  const Json jcert = read_json(dir / "certificate.json");
  KanNetwork net = [&] {
    try {
      return network_from_json(read_json(dir / "network.json"));
    } catch (const SchemaError& e) {
      throw InputError(std::string("network.json ") + e.what());
    }
  }();
  if (!jcert.contains("expr") || !jcert.contains("expr_hash") || !jcert.contains("config")) {
    throw InputError("certificate.json lacks expr, expr_hash or config");
  }
  const CompTree tree = parse_or_report(expr.empty() ? jcert["expr"].get<std::string>() : expr);
  const std::string hash = tree_hash(tree);
  const std::string recorded = jcert["expr_hash"].get<std::string>();
  const std::string in_net = net.meta().value("expr_hash", recorded);
  if (hash != recorded || hash != in_net) {
    std::cerr << "expression hash mismatch: " << hash << " vs certificate " << recorded << " / network " << in_net
              << "\n";
    return kExitHash;
  }

  CompileConfig cc;
  const Json& jc = jcert["config"];
  cc.grid = jc.value("grid", cc.grid);
  cc.order = jc.value("order", cc.order);
  cc.faithful_widths = jc.value("faithful_widths", cc.faithful_widths);
  cc.quad_degree = jc.value("quad_degree", cc.quad_degree);
  cc.quad_grid = jc.value("quad_grid", cc.quad_grid);
  std::optional<AffineBox> box;
  if (jcert.contains("box")) {
    std::vector<Interval> iv;
    for (const auto& e : jcert["box"]["intervals"]) iv.emplace_back(e[0].get<double>(), e[1].get<double>());
    box = affine_box(std::move(iv));
  }
  const Compiled ref = box ? compile_on_box(tree, *box, cc) : compile(tree, cc);
  CheckReport report = check_network(tree, net, ref.cert, c.run.verify_config());
  auto agree = [&](const char* key, double recomputed) {
    const double stored = jcert.value(key, std::numeric_limits<double>::quiet_NaN());
    report.checks.push_back({std::string("certificate ") + key + " = recomputed", stored, recomputed, stored == recomputed});
    report.ok = report.ok && stored == recomputed;
  };
  agree("p_bound", ref.cert.p_bound);
  agree("error_bound", ref.cert.error_bound);
  agree("width_bound", ref.cert.width_bound);

  if (c.format == "json") {
    emit(check_json(report).dump(2) + "\n", c.out);
  } else {
    emit(render_table(check_table(report), c.format), c.out);
  }
  if (const Check* bad = report.first_failure()) {
    std::cerr << "verification failed: " << bad->name << " (" << format_exact(bad->lhs) << " vs "
              << format_exact(bad->rhs) << ")\n";
    return kExitViolation;
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Compile symbolic expressions into certified Kolmogorov-Arnold networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  Common c;
  std::string expr, box_text, in_dir, fit = "interp";
  int count = 1000, max_depth = 5;

  auto* compile_cmd = app.add_subcommand("compile", "compile an expression and write network/certificate JSON");
  compile_cmd->add_option("-e,--expr", expr, "expression, e.g. sin(x1*x2)")->required();
  compile_cmd->add_flag("--faithful-widths", c.run.faithful_widths, "keep every identity wire of the construction");
  compile_cmd->add_option("--box", box_text, "input box a1:b1,a2:b2,... (default [0,1]^n)");
  add_common(compile_cmd, c, true);

  auto* verify_cmd = app.add_subcommand("verify", "re-check a compiled network against its expression");
  verify_cmd->add_option("-i,--in", in_dir, "directory holding network.json and certificate.json")->required();
  verify_cmd->add_option("-e,--expr", expr, "expression (default: the one recorded in the certificate)");
  add_common(verify_cmd, c, true);

  auto* table_cmd = app.add_subcommand("table-products", "P for the product families");
  add_common(table_cmd, c, false);

  auto* rate_cmd = app.add_subcommand("sweep-rate", "spline error against grid size for sin on [0,1]");
  rate_cmd->add_option("--fit", fit, "fitting method")->check(CLI::IsMember({"interp", "lsq"}));
  add_common(rate_cmd, c, true);

  auto* fuzz_cmd = app.add_subcommand("fuzz", "compile and check random trees");
  fuzz_cmd->add_option("--count", count, "number of trees")->check(CLI::PositiveNumber);
  fuzz_cmd->add_option("--max-depth", max_depth, "maximum tree depth")->check(CLI::Range(1, 12));
  fuzz_cmd->add_flag("--faithful-widths", c.run.faithful_widths, "keep every identity wire of the construction");
  add_common(fuzz_cmd, c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }
  c.run.seed = seed_from_env(c.run.seed);
  if (c.format == "table" && (table_cmd->parsed() || rate_cmd->parsed()) && !c.out.empty()) c.format = "csv";

  try {
    if (compile_cmd->parsed()) return cmd_compile(expr, box_text, c);
    if (verify_cmd->parsed()) return cmd_verify(in_dir, expr, c);
    if (table_cmd->parsed()) {
      const auto rows = table_products(c.run);
      emit(render_table(product_table(rows), c.format), c.out);
      for (const auto& r : rows) {
        if (r.P_measured != 1.0) return kExitViolation;
      }
      return 0;
    }
    if (rate_cmd->parsed()) {
      const RateSweep sweep = sweep_rate(c.run, fit == "lsq" ? FitMethod::LeastSquares : FitMethod::Interpolate);
      emit(render_table(rate_table(sweep), c.format), c.out);
      if (!sweep.constant) {
        std::cerr << "ratio drift " << format_exact(sweep.spread) << " exceeds a factor of 2\n";
        return kExitViolation;
      }
      return 0;
    }
    if (fuzz_cmd->parsed()) {
      const FuzzReport r = run_fuzz(c.run, count, max_depth);
      Table t{{"trees", "passed", "failed", "additive_ok"}, {}};
      bool additive_ok = true;
      for (const auto& a : r.additive) additive_ok = additive_ok && a.ok;
      t.rows.push_back({std::to_string(r.trees), std::to_string(r.passed), std::to_string(r.failures.size()),
                        additive_ok ? "yes" : "NO"});
      std::cout << render_table(t, c.format);
      if (!r.failures.empty()) {
        Json jf = Json::array();
        for (const auto& f : r.failures) jf.push_back({{"index", f.index}, {"expr", f.expr}, {"reason", f.reason}});
        if (c.out.empty()) {
          std::cerr << jf.dump(2) << "\n";
        } else {
          write_file(c.out, jf.dump(2) + "\n");
        }
      }
      return r.ok() ? 0 : kExitViolation;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const CompileError& e) {
    std::cerr << "compile error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kExitInput;
  }
}
