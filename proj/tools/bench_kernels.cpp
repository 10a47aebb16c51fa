// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <cmath>

#include "kanforge/compiler.hpp"
#include "kanforge/kernels.hpp"
#include "kanforge/spline.hpp"

using namespace kanforge;
namespace kr = kanforge::kernels;

namespace {

const CompTree& tree() {
  static const CompTree t = parse_expression("sin(x1*x2)*cos(x3-x4)+x5*(x1+x6)");
  return t;
}

const Compiled& compiled() {
  static const Compiled c = compile(tree());
  return c;
}

kr::SampleSet samples(benchmark::State& state) {
  return kr::uniform_samples(tree_stats(tree()).n, static_cast<std::size_t>(state.range(0)), 42);
}

void BM_forward_serial(benchmark::State& state) {
  const auto s = samples(state);
  for (auto _ : state) benchmark::DoNotOptimize(kr::reference::forward_batch(compiled().net, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_forward_parallel(benchmark::State& state) {
  const auto s = samples(state);
  for (auto _ : state) benchmark::DoNotOptimize(kr::forward_batch(compiled().net, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_error_serial(benchmark::State& state) {
  const auto s = samples(state);
  for (auto _ : state) benchmark::DoNotOptimize(kr::reference::max_abs_error(compiled().net, tree(), s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_error_parallel(benchmark::State& state) {
  const auto s = samples(state);
  for (auto _ : state) benchmark::DoNotOptimize(kr::max_abs_error(compiled().net, tree(), s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ranges_serial(benchmark::State& state) {
  const auto s = samples(state);
  for (auto _ : state) benchmark::DoNotOptimize(kr::reference::node_sup_abs(tree(), s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ranges_parallel(benchmark::State& state) {
  const auto s = samples(state);
  for (auto _ : state) benchmark::DoNotOptimize(kr::node_sup_abs(tree(), s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

const auto kSin = [](double t) { return std::sin(t); };

void BM_spline_error_serial(benchmark::State& state) {
  const Spline s = cubic_interpolant(kSin, 0.0, 1.0, 35);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kr::reference::spline_sup_error(kSin, s, static_cast<std::size_t>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_spline_error_parallel(benchmark::State& state) {
  const Spline s = cubic_interpolant(kSin, 0.0, 1.0, 35);
  for (auto _ : state) benchmark::DoNotOptimize(kr::spline_sup_error(kSin, s, static_cast<std::size_t>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_forward_serial)->Arg(10000)->Arg(100000);
BENCHMARK(BM_forward_parallel)->Arg(10000)->Arg(100000);
BENCHMARK(BM_error_serial)->Arg(10000)->Arg(100000);
BENCHMARK(BM_error_parallel)->Arg(10000)->Arg(100000);
BENCHMARK(BM_ranges_serial)->Arg(100000);
BENCHMARK(BM_ranges_parallel)->Arg(100000);
BENCHMARK(BM_spline_error_serial)->Arg(100000);
BENCHMARK(BM_spline_error_parallel)->Arg(100000);

BENCHMARK_MAIN();
