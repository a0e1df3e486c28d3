#include "robarb/hjb.hpp"
#include "robarb/volstab.hpp"

#include <benchmark/benchmark.h>

using namespace robarb;

namespace {

void BM_SolveLinear(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto g = GridSpec::cube(2, 3.0, m, 0.25);
  long steps = 0;
  for (auto _ : state) {
    auto s = solve_linear([](const Vec& z) { return volstab_covariance(z); }, g);
    steps = s.stats.steps;
    benchmark::DoNotOptimize(s.value.slices.back().data());
  }
  state.counters["K"] = static_cast<double>(steps);
  state.counters["node_steps/s"] =
      benchmark::Counter(static_cast<double>(steps) * static_cast<double>(g.node_count()) * static_cast<double>(state.iterations()),
                         benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SolveLinear)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

void BM_SolveHjbBand(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  const auto fam = volstab_family(2, 0.5);
  const auto g = GridSpec::cube(2, 3.0, 33, 0.25);
  SolverOptions o;
  o.threads = threads;
  for (auto _ : state) {
    auto s = solve_hjb(*fam, {3, 2}, g, o);
    benchmark::DoNotOptimize(s.value.slices.back().data());
  }
}
BENCHMARK(BM_SolveHjbBand)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_SolveLinear3d(benchmark::State& state) {
  const auto g = GridSpec::cube(3, 2.0, 17, 0.05);
  for (auto _ : state) {
    auto s = solve_linear([](const Vec& z) { return volstab_covariance(z); }, g);
    benchmark::DoNotOptimize(s.value.slices.back().data());
  }
}
BENCHMARK(BM_SolveLinear3d)->Unit(benchmark::kMillisecond);

void BM_PdiResidual(benchmark::State& state) {
  const auto fam = volstab_family(2, 0.5);
  const auto s = solve_hjb(*fam, {3, 1}, GridSpec::cube(2, 3.0, 33, 0.25));
  for (auto _ : state) {
    auto r = pdi_residual(s.value, *fam, {3, 1}, 1e-2);
    benchmark::DoNotOptimize(r.min_residual);
  }
}
BENCHMARK(BM_PdiResidual)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
