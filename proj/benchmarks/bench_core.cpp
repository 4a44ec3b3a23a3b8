#include <benchmark/benchmark.h>

#include "acrl/ac_model.hpp"
#include "acrl/execution.hpp"
#include "acrl/pipeline.hpp"
#include "acrl/synthetic.hpp"

namespace {

using namespace acrl;

SideLevels deep_book() {
  SideLevels book{};
  for (std::size_t k = 0; k < kBookDepth; ++k) book[k] = {100.0 + 0.01 * static_cast<double>(k), 4000.0};
  return book;
}

void BM_WalkBook(benchmark::State& state) {
  const auto book = deep_book();
  const double volume = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(walk_book(book, volume, 0.2));
}
BENCHMARK(BM_WalkBook)->Arg(500)->Arg(3000)->Arg(50000);

void BM_ComputeTrajectory(benchmark::State& state) {
  ACParams p;
  p.sigma = 0.05;
  p.eta = 1e-4;
  p.lambda = 1e-3;
  p.periods = static_cast<std::size_t>(state.range(0));
  p.volume = 100000;
  for (auto _ : state) benchmark::DoNotOptimize(round_to_shares(compute_trajectory(p)));
}
BENCHMARK(BM_ComputeTrajectory)->Arg(4)->Arg(12)->Arg(100);

void BM_Aggregate(benchmark::State& state) {
  const auto snaps = generate_synthetic(1, 5, RegimeSchedule{});
  for (auto _ : state) benchmark::DoNotOptimize(aggregate_intervals(snaps, 300));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(snaps.size()));
}
BENCHMARK(BM_Aggregate);

// Calibration, training and both backtests for one run.
void BM_Pipeline(benchmark::State& state) {
  RegimeSchedule regime;
  regime.unfavourable.spread = 0.3;
  const auto split = split_by_fraction(aggregate_intervals(generate_synthetic(3, 40, regime), 300), 0.5);
  RunConfig cfg;
  cfg.volume = 5000;
  cfg.dims = StateDims{static_cast<std::size_t>(state.range(0)), 12, 2, 2};
  cfg.grid = ActionGrid::uniform(0.0, 2.0, 0.5);
  cfg.hour = 10;
  cfg.lambda = 1e-4;
  PipelineOptions options;
  options.trace_stride = 100;
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(split, cfg, options));
}
BENCHMARK(BM_Pipeline)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
