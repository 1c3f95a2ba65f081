#include <benchmark/benchmark.h>

#include "riskmm/harness.hpp"
#include "riskmm/metrics.hpp"

namespace {

using namespace riskmm;

void bm_generate_scenario(benchmark::State& state) {
  const sim::GenerationConfig gen;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    Scenario sc = sim::generate_scenario(gen, seed++);
    benchmark::DoNotOptimize(sc.features.values().data());
  }
}

void bm_occupancy_auc(benchmark::State& state) {
  const sim::GenerationConfig gen;
  const Scenario sc = sim::generate_scenario(gen, 5);
  const OccupancyGrid pred = sim::predicted_occupancy(sc);
  for (auto _ : state) {
    double auc = metrics::occupancy_auc(pred, sc.gt_occupancy);
    benchmark::DoNotOptimize(auc);
  }
}

BENCHMARK(bm_generate_scenario);
BENCHMARK(bm_occupancy_auc);

}  // namespace

BENCHMARK_MAIN();
