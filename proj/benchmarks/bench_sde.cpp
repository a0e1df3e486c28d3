#include "robarb/portfolio.hpp"
#include "robarb/volstab.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace robarb;

namespace {

SimConfig config(long paths, long steps) {
  SimConfig c;
  c.paths = paths;
  c.steps = steps;
  c.seed = 1;
  c.keep_paths = false;
  return c;
}

void BM_Simulate(benchmark::State& state) {
  SimConfig c = config(1000, 500);
  c.scheme = state.range(0) ? Scheme::LogEuler : Scheme::EulerFullTruncation;
  const auto m = least_favorable_model(2);
  const Vec x0 = Vec::Ones(2);
  for (auto _ : state) {
    auto b = simulate(m, x0, c);
    benchmark::DoNotOptimize(b.terminal_x.data());
  }
  state.counters["path_steps/s"] =
      benchmark::Counter(static_cast<double>(c.paths * c.steps) * static_cast<double>(state.iterations()),
                         benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Containment(benchmark::State& state) {
  const auto m = auxiliary_model(2);
  const Vec x0 = Vec::Ones(2);
  SimConfig c = config(2000, 500);
  c.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(containment_probability(m, x0, c).q_hat);
}
BENCHMARK(BM_Containment)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  const Vec x0 = Vec::Ones(2);
  OracleOptions o;
  o.u_step = 2e-3;
  for (auto _ : state) benchmark::DoNotOptimize(oracle_u(x0, 1.0, 1000, 3, o).u_hat);
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);

void BM_BacktestGenerated(benchmark::State& state) {
  const auto s = solve_example_pde(GridSpec::cube(2, 3.0, 33, 1.0));
  const auto U = std::make_shared<const GridInterpolator>(s.value);
  const auto rule = InvestmentRule::generated(U, 1.0);
  const auto m = perturbed_model(2, 1.2);
  const Vec x0 = Vec::Ones(2);
  BacktestOptions o;
  o.keep_paths = false;
  for (auto _ : state) {
    auto l = backtest(rule, m, x0, 2.0, config(500, 500), o);
    benchmark::DoNotOptimize(l.terminal_wealth.data());
  }
}
BENCHMARK(BM_BacktestGenerated)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
