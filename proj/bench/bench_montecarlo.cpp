#include <benchmark/benchmark.h>

#include "ofo/harness.hpp"

namespace {

ofo::ScenarioConfig bench_config(ofo::Variant variant) {
  ofo::ScenarioConfig cfg;
  cfg.variant = variant;
  cfg.steps = 200;
  return cfg;
}

void BM_SingleRun(benchmark::State& state) {
  const auto cfg = bench_config(static_cast<ofo::Variant>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ofo::run_scenario(cfg));
}
BENCHMARK(BM_SingleRun)
    ->Arg(static_cast<int>(ofo::Variant::plain))
    ->Arg(static_cast<int>(ofo::Variant::gaussian))
    ->Arg(static_cast<int>(ofo::Variant::pe))
    ->Unit(benchmark::kMillisecond);

void BM_MonteCarloSerial(benchmark::State& state) {
  const auto cfg = bench_config(ofo::Variant::gaussian);
  for (auto _ : state) benchmark::DoNotOptimize(ofo::monte_carlo_serial(cfg, state.range(0)));
}
BENCHMARK(BM_MonteCarloSerial)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_MonteCarloParallel(benchmark::State& state) {
  const auto cfg = bench_config(ofo::Variant::gaussian);
  for (auto _ : state) benchmark::DoNotOptimize(ofo::monte_carlo(cfg, state.range(0)));
}
BENCHMARK(BM_MonteCarloParallel)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
