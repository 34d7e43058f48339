#include <benchmark/benchmark.h>

#include "qdensity/resampler.hpp"
#include "qdensity/simulation.hpp"
#include "qdensity/variance_select.hpp"

using namespace qdensity;

namespace {

StepCdf fixture(std::size_t n) {
  ScenarioSpec spec;
  spec.n = n;
  spec.target_censoring = 0.25;
  return km_fit(draw_sample(spec, calibrate_censoring(spec), 0));
}

void BM_LsParallel(benchmark::State& state) {
  const StepCdf curve = fixture(static_cast<std::size_t>(state.range(1)));
  const LsConfig config{static_cast<std::size_t>(state.range(0)), 2.0, 1, 0};
  for (auto _ : state) benchmark::DoNotOptimize(ls_density(curve, 0.5, config).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LsSerial(benchmark::State& state) {
  const StepCdf curve = fixture(static_cast<std::size_t>(state.range(1)));
  const LsConfig config{static_cast<std::size_t>(state.range(0)), 2.0, 1, 0};
  for (auto _ : state) benchmark::DoNotOptimize(reference::ls_density(curve, 0.5, config).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GridEstimates(benchmark::State& state) {
  const StepCdf curve = fixture(200);
  const SigmaGrid grid = SigmaGrid::default_grid();
  const auto resamples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grid_estimates(curve, 0.5, grid, resamples, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 200);
}

}  // namespace

BENCHMARK(BM_LsParallel)->ArgsProduct({{1000, 100000, 1000000}, {50, 1000}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LsSerial)->ArgsProduct({{1000, 100000, 1000000}, {50, 1000}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GridEstimates)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
