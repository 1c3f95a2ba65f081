#include <benchmark/benchmark.h>

#include "riskmm/dynamics.hpp"
#include "riskmm/planner.hpp"
#include "riskmm/rng.hpp"

namespace {

using namespace riskmm;

Eigen::MatrixXd random_slice(int horizon, Rng& rng) {
  Eigen::MatrixXd raw(horizon, kCostParamsPerStep);
  for (int t = 0; t < horizon; ++t) {
    for (int d = 0; d < 4; ++d) raw(t, d) = rng.uniform(0.5, 2.0);
    raw(t, 4) = rng.uniform(0.5, 2.0);
    raw(t, 5) = rng.uniform(-0.4, 0.4);
    raw(t, 6) = rng.uniform(-0.4, 0.4);
    raw(t, 7) = rng.uniform(0.5, 2.0);
    for (int d = 8; d < kCostParamsPerStep; ++d) raw(t, d) = rng.uniform(-1.0, 1.0);
  }
  return raw;
}

void bm_kkt_solve(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  Rng rng(42);
  const auto weights = assemble_weight_sequence(random_slice(horizon, rng));
  PlanState x0{0.0, 10.0, 0.0, 0.0};
  const LinearizedDynamics dyn = linearize(x0, horizon, 0.5, 2.7);
  const KKTSystem sys = assemble_kkt(weights, dyn, x0);
  for (auto _ : state) {
    PlannerSolution sol = solve_kkt(sys);
    benchmark::DoNotOptimize(sol.decision.data());
  }
}

void bm_speed_enforcement(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  Rng rng(43);
  Eigen::MatrixXd raw = random_slice(horizon, rng);
  raw.col(9).setConstant(-8.0);  // pull speed up so the bound binds
  const auto weights = assemble_weight_sequence(raw);
  PlanState x0{0.0, 10.0, 0.0, 0.0};
  const LinearizedDynamics dyn = linearize(x0, horizon, 0.5, 2.7);
  const KKTSystem sys = assemble_kkt(weights, dyn, x0);
  for (auto _ : state) {
    PlannerSolution sol = solve_kkt(sys);
    sol = enforce_speed_constraint(sol, sys, 12.0);
    benchmark::DoNotOptimize(sol.decision.data());
  }
}

BENCHMARK(bm_kkt_solve)->Arg(2)->Arg(7)->Arg(20);
BENCHMARK(bm_speed_enforcement)->Arg(7);

}  // namespace

BENCHMARK_MAIN();
