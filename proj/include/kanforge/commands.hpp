#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kanforge/compiler.hpp"

namespace kanforge {

struct RunConfig {
  int grid = 35;
  int order = 3;
  std::size_t samples = 100000;
  std::uint64_t seed = 42;
  bool faithful_widths = false;

  void validate() const;
  CompileConfig compile_config() const;
  VerifyConfig verify_config() const;
};

/// KANFORGE_SEED if set and numeric, otherwise `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

/// Rows of strings with CSV, aligned-text and JSON renderings.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
  std::string to_text() const;
  Json to_json() const;
};

/// Shortest round-trip decimal form (%.17g).
std::string format_exact(double v);

struct ProductRow {
  std::string f;
  int n = 0;
  int N = 0;
  double P_measured = 0.0;
  double P_bound = 0.0;
};

/// xy, xyz, sin(xy) and x1...xn for n = 2..10, compiled with the full
/// identity-wire construction.
std::vector<ProductRow> table_products(const RunConfig& config);
Table product_table(const std::vector<ProductRow>& rows);

enum class FitMethod { Interpolate, LeastSquares };

struct RateRow {
  int G = 0;
  double error = 0.0;
  double h4 = 0.0;
  double ratio = 0.0;
};

struct RateSweep {
  std::vector<RateRow> rows;
  double spread = 0.0;  // max ratio / min ratio
  bool constant = false;
};

/// Error of degree-`order` fits of sin on [0,1] over the grids; the error
/// is sampled on `samples` points.
RateSweep sweep_rate(const RunConfig& config, FitMethod fit, const std::vector<int>& grids = {5, 12, 35});
Table rate_table(const RateSweep& sweep);

/// Random tree over {+, -, *, sin, cos}: a node at depth t becomes a leaf
/// with probability t / max_depth, leaf coordinates are uniform on 1..max_coord.
CompTree random_tree(std::mt19937_64& rng, int max_depth = 5, int max_coord = 6);

/// Balanced all-add tree of the given depth on distinct coordinates.
CompTree additive_tree(int depth);

struct FuzzFailure {
  int index = 0;
  std::string expr;
  std::string reason;
};

struct AdditiveCheck {
  int depth = 0;
  int N = 0;
  double certified = 0.0;
  double measured = 0.0;
  bool ok = false;
};

struct FuzzReport {
  int trees = 0;
  int passed = 0;
  std::vector<FuzzFailure> failures;
  std::vector<AdditiveCheck> additive;
  bool ok() const;
};

FuzzReport run_fuzz(const RunConfig& config, int count, int max_depth = 5);

}  // namespace kanforge
