#include <benchmark/benchmark.h>

#include "riskmm/attention.hpp"
#include "riskmm/harness.hpp"

namespace {

using namespace riskmm;

void bm_risk_cross_attention(benchmark::State& state) {
  const sim::GenerationConfig gen;
  const Scenario sc = sim::generate_scenario(gen, 7);
  const AttentionParams params = sim::seeded_attention_params(
      static_cast<int>(state.range(0)), sim::kFeatureChannels, 11);
  const Eigen::MatrixXd pos = position_embedding(sc.grid, params.model_dim);
  std::vector<CellIndex> cells;
  for (const VehicleRecord& v : sc.vehicles) cells.push_back(v.cell);
  for (auto _ : state) {
    RiskAttentionOutput out = risk_cross_attention(sc.features, cells, params, pos);
    benchmark::DoNotOptimize(out.risk_map.weights.data());
  }
}

void bm_position_embedding(benchmark::State& state) {
  const GridSpec grid = GridSpec::defaults();
  for (auto _ : state) {
    Eigen::MatrixXd emb = position_embedding(grid, 8);
    benchmark::DoNotOptimize(emb.data());
  }
}

BENCHMARK(bm_risk_cross_attention)->Arg(1)->Arg(4);
BENCHMARK(bm_position_embedding);

}  // namespace

BENCHMARK_MAIN();
