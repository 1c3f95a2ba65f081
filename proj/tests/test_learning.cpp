#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "riskmm/errors.hpp"
#include "riskmm/learning.hpp"
#include "riskmm/rng.hpp"

using namespace riskmm;

namespace {

Scenario scenario_with(std::vector<Pose> poses, int horizon = 7) {
  Scenario sc;
  sc.grid = GridSpec::defaults();
  sc.dt = 0.5;
  sc.horizon = horizon;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    VehicleRecord v;
    v.id = static_cast<int>(i);
    v.pose = poses[i];
    v.true_pose = poses[i];
    v.length = 4.5;
    v.width = 1.9;
    v.l_fr = 2.8;
    sc.vehicles.push_back(std::move(v));
  }
  return sc;
}

/// Constant-velocity continuations so other_true_trajectories spans the
/// horizon.
void extend_futures(Scenario& sc) {
  for (VehicleRecord& v : sc.vehicles) {
    v.gt_future.clear();
    for (int k = 1; k < sc.horizon; ++k) {
      Pose p = v.true_pose;
      p.x += std::cos(p.heading) * p.speed * sc.dt * k;
      p.y += std::sin(p.heading) * p.speed * sc.dt * k;
      v.gt_future.push_back(p);
    }
  }
}

/// Raw cost slice drawn from the well-conditioned band: quadratic entries far
/// enough above the softplus knee that their derivative stays near one.
Eigen::MatrixXd random_slice(Rng& rng, int T) {
  Eigen::MatrixXd slice(T, kCostParamsPerStep);
  for (int t = 0; t < T; ++t) {
    for (int j : {0, 1, 2, 3, 4, 7}) slice(t, j) = rng.uniform(0.5, 2.0);
    for (int j : {5, 6}) slice(t, j) = rng.uniform(-0.4, 0.4);
    for (int j = 8; j < kCostParamsPerStep; ++j) slice(t, j) = rng.uniform(-1.0, 1.0);
  }
  return slice;
}

Trajectory to_trajectory(const PlannedTrajectory& planned) {
  Trajectory t;
  t.reserve(planned.points.size());
  for (const PlannedPoint& p : planned.points)
    t.push_back({p.x, p.y, p.heading, p.speed});
  return t;
}

/// Target planned from a nearby slice. Keeps the tracking loss small so the
/// central-difference probe stays above its own rounding noise on entries
/// whose true gradient is zero (the pinned first state).
Trajectory nearby_target(const Scenario& sc, int vehicle,
                         const Eigen::MatrixXd& slice, const PlannerConfig& cfg,
                         Rng& rng, double amplitude = 0.008) {
  Eigen::MatrixXd near = slice;
  for (Eigen::Index i = 0; i < near.size(); ++i)
    near(i) += rng.uniform(-amplitude, amplitude);
  return to_trajectory(plan(sc, vehicle, near, cfg));
}

/// Worst relative error over entries carrying signal; below the signal floor
/// the central difference is rounding noise and only absolute agreement is
/// meaningful.
double masked_max_rel(const GradientReport& report, double signal_floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < report.analytic.size(); ++i) {
    if (std::max(std::abs(report.analytic[i]),
                 std::abs(report.finite_difference[i])) < signal_floor)
      continue;
    worst = std::max(worst, report.rel_errors[i]);
  }
  return worst;
}

PlannerConfig open_road_config(int horizon) {
  PlannerConfig cfg;
  cfg.dt = 0.5;
  cfg.horizon = horizon;
  cfg.v_max = 1e3;
  return cfg;
}

struct FitFixture {
  DemonstrationSet batch;
  DecoderParams decoder;
  PlannerConfig planner;
};

/// Two scenarios, two vehicles each; targets planned from the fixture's own
/// decoder, so that decoder is a stationary point of the fit.
FitFixture make_fixture(std::uint64_t seed) {
  Rng rng(seed);
  FitFixture fx;
  fx.planner = open_road_config(7);
  const int T = fx.planner.horizon;
  const int C = 3;

  Eigen::VectorXd base(kCostParamsPerStep);
  base << 0.8, 0.8, 0.8, 0.8, 1.0, 0.0, 0.0, 1.0, 0.0, 0.6, 0.0, 0.0, 0.0, 0.0;
  fx.decoder.W.resize(T * kCostParamsPerStep, C);
  for (Eigen::Index r = 0; r < fx.decoder.W.rows(); ++r)
    for (Eigen::Index c = 0; c < C; ++c) fx.decoder.W(r, c) = rng.uniform(-0.05, 0.05);
  fx.decoder.b.resize(T * kCostParamsPerStep);
  for (int t = 0; t < T; ++t)
    fx.decoder.b.segment(t * kCostParamsPerStep, kCostParamsPerStep) = base;

  for (int s = 0; s < 2; ++s) {
    Scenario sc = scenario_with({{-15.0 + 5.0 * s, -4.0, 0.2, 8.0},
                                 {12.0, 6.0, -0.4, 9.0}});
    fx.batch.scenarios.push_back(std::move(sc));
    Eigen::MatrixXd feats(2, C);
    for (int v = 0; v < 2; ++v)
      for (int c = 0; c < C; ++c) feats(v, c) = rng.uniform(-1.0, 1.0);
    fx.batch.risk_features.push_back(std::move(feats));
  }
  for (int s = 0; s < 2; ++s) {
    const CostMap cm = decode_cost_map(fx.batch.risk_features[s], fx.decoder);
    for (int v = 0; v < 2; ++v) {
      Demonstration d;
      d.scenario = s;
      d.vehicle = v;
      d.target = to_trajectory(
          plan(fx.batch.scenarios[s], v, cm.per_vehicle[v], fx.planner));
      fx.batch.demos.push_back(std::move(d));
    }
  }
  return fx;
}

DecoderParams perturbed(const DecoderParams& decoder, std::uint64_t seed,
                        double amplitude) {
  Rng rng(seed);
  DecoderParams out = decoder;
  for (Eigen::Index i = 0; i < out.b.size(); ++i)
    out.b[i] += rng.uniform(-amplitude, amplitude);
  return out;
}

}  // namespace

TEST_CASE("planning loss matches direct evaluation") {
  Scenario sc = scenario_with({{0, 0, 0.3, 8}, {2, 3, 0.3, 8}});
  extend_futures(sc);
  const PlannerConfig cfg = open_road_config(7);
  Rng rng(11);
  const Eigen::MatrixXd slice = random_slice(rng, cfg.horizon);
  const Trajectory target =
      to_trajectory(plan(sc, 0, random_slice(rng, cfg.horizon), cfg));
  std::vector<Trajectory> others = {sc.vehicles[1].true_trajectory()};

  SUBCASE("pure tracking loss") {
    LossConfig loss_cfg;
    const auto g =
        planning_loss_with_gradient(sc, 0, slice, target, others, cfg, loss_cfg);
    CHECK(g.loss == mse_planning_loss(g.trajectory, target));
    CHECK(static_cast<int>(g.trajectory.points.size()) == cfg.horizon);
    CHECK(!g.on_constraint_boundary);
  }
  SUBCASE("collision term added when weighted") {
    LossConfig loss_cfg;
    loss_cfg.collision_weight = 0.5;
    const auto g =
        planning_loss_with_gradient(sc, 0, slice, target, others, cfg, loss_cfg);
    const double expected = mse_planning_loss(g.trajectory, target) +
                            0.5 * collision_penalty(g.trajectory, others, loss_cfg);
    CHECK(g.loss == doctest::Approx(expected).epsilon(1e-15));
  }
  SUBCASE("invalid loss config is rejected") {
    LossConfig loss_cfg;
    loss_cfg.smooth_l1_beta = 0.0;
    CHECK_THROWS_AS(
        planning_loss_with_gradient(sc, 0, slice, target, others, cfg, loss_cfg),
        ConfigError);
  }
  SUBCASE("target length mismatch is rejected") {
    const Trajectory short_target(target.begin(), target.end() - 1);
    LossConfig loss_cfg;
    CHECK_THROWS_AS(planning_loss_with_gradient(sc, 0, slice, short_target, others,
                                                cfg, loss_cfg),
                    ShapeError);
  }
}

TEST_CASE("analytic gradient matches central differences off the boundary") {
  LossConfig loss_cfg;
  for (int horizon : {2, 3, 7}) {
    CAPTURE(horizon);
    const PlannerConfig cfg = open_road_config(horizon);
    for (std::uint64_t seed : {101u, 102u, 103u}) {
      CAPTURE(seed);
      Rng rng(seed + 17 * static_cast<std::uint64_t>(horizon));
      Scenario sc = scenario_with(
          {{rng.uniform(-10, 10), rng.uniform(-5, 5), rng.uniform(-0.6, 0.6),
            rng.uniform(5, 10)}},
          horizon);
      const Eigen::MatrixXd slice = random_slice(rng, horizon);
      const Trajectory target = nearby_target(sc, 0, slice, cfg, rng);
      const auto report = grad_through_planner(sc, 0, slice, target, cfg, loss_cfg);
      CHECK(!report.on_constraint_boundary);
      CHECK(report.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("collision gradient matches central differences") {
  Scenario sc = scenario_with({{0, 0, 0, 8}, {0, 3.95, 0, 8}}, 5);
  extend_futures(sc);
  const PlannerConfig cfg = open_road_config(5);
  Rng rng(7);
  const Eigen::MatrixXd slice = random_slice(rng, cfg.horizon);
  const Trajectory target = to_trajectory(plan(sc, 0, slice, cfg));

  LossConfig loss_cfg;
  loss_cfg.collision_weight = 0.5;
  const std::vector<Trajectory> others = {sc.vehicles[1].true_trajectory()};
  // The parallel neighbor keeps the hinge strictly but mildly active, so the
  // loss stays small enough for the probe on zero-gradient entries.
  const auto g =
      planning_loss_with_gradient(sc, 0, slice, target, others, cfg, loss_cfg);
  CHECK(g.loss > mse_planning_loss(g.trajectory, target));

  const auto report = grad_through_planner(sc, 0, slice, target, cfg, loss_cfg);
  CHECK(masked_max_rel(report, 1e-6) <= 1e-4);
  for (Eigen::Index i = 0; i < report.analytic.size(); ++i) {
    const double a = std::abs(report.analytic[i]);
    const double f = std::abs(report.finite_difference[i]);
    if (std::max(a, f) < 1e-6) CHECK(std::abs(a - f) <= 1e-9);
  }
}

TEST_CASE("parameters without influence get zero gradient") {
  // A stationary vehicle freezes the lateral and heading chains, and with a
  // diagonal control weight the steering column decouples entirely.
  const int T = 5;
  Scenario sc = scenario_with({{3, -2, 0.4, 0}}, T);
  const PlannerConfig cfg = open_road_config(T);
  Eigen::MatrixXd slice(T, kCostParamsPerStep);
  Rng rng(23);
  for (int t = 0; t < T; ++t) {
    slice.row(t) = random_slice(rng, 1).row(0);
    slice(t, 5) = 0.0;
    slice(t, 6) = 0.0;
  }
  Trajectory target;
  for (int k = 0; k < T; ++k)
    target.push_back({3.0 + 0.1 * k, -2.0 + 0.05 * k, 0.4, 0.0});

  LossConfig loss_cfg;
  const auto g = planning_loss_with_gradient(sc, 0, slice, target, {}, cfg, loss_cfg);
  for (int col : {2, 3, 7, 10, 11, 13}) {
    CAPTURE(col);
    CHECK(g.slice_grad.col(col).cwiseAbs().maxCoeff() <= 1e-8);
  }
  CHECK(g.slice_grad.col(8).cwiseAbs().maxCoeff() > 1e-6);
  CHECK(g.slice_grad.col(12).cwiseAbs().maxCoeff() > 1e-8);

  const auto report = grad_through_planner(sc, 0, slice, target, cfg, loss_cfg);
  CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("speed bound raises the boundary flag") {
  Scenario sc = scenario_with({{0, 0, 0, 10}});
  PlannerConfig cfg = open_road_config(4);
  cfg.v_max = 10.5;
  Eigen::MatrixXd slice(cfg.horizon, kCostParamsPerStep);
  Eigen::VectorXd row(kCostParamsPerStep);
  // Floored speed weight plus a strong speed reward pushes into the bound.
  row << 0.8, -1.0, 0.8, 0.8, 1.0, 0.0, 0.0, 1.0, 0.0, 15.0, 0.0, 0.0, 0.0, 0.0;
  for (int t = 0; t < cfg.horizon; ++t) slice.row(t) = row;
  Trajectory target;
  for (int k = 0; k < cfg.horizon; ++k) target.push_back({5.0 * k, 0.0, 0.0, 10.0});

  LossConfig loss_cfg;
  const auto g = planning_loss_with_gradient(sc, 0, slice, target, {}, cfg, loss_cfg);
  CHECK(g.on_constraint_boundary);
  CHECK(!g.solution.active_speed_steps.empty());
  CHECK(g.slice_grad.allFinite());
}

TEST_CASE("collision gradient is linear in its weight") {
  Scenario sc = scenario_with({{0, 0, 0, 8}, {0, 3, 0, 8}}, 5);
  extend_futures(sc);
  const PlannerConfig cfg = open_road_config(5);
  Rng rng(31);
  const Eigen::MatrixXd slice = random_slice(rng, cfg.horizon);
  const Trajectory target = to_trajectory(plan(sc, 0, slice, cfg));
  const std::vector<Trajectory> others = {sc.vehicles[1].true_trajectory()};

  auto grad_at = [&](double weight) {
    LossConfig loss_cfg;
    loss_cfg.collision_weight = weight;
    return planning_loss_with_gradient(sc, 0, slice, target, others, cfg, loss_cfg);
  };
  const auto g0 = grad_at(0.0);
  const auto g1 = grad_at(0.4);
  const auto g2 = grad_at(0.8);
  const Eigen::MatrixXd lhs = g2.slice_grad - g0.slice_grad;
  const Eigen::MatrixXd rhs = 2.0 * (g1.slice_grad - g0.slice_grad);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(g2.loss - g0.loss == doctest::Approx(2.0 * (g1.loss - g0.loss)).epsilon(1e-10));
}

TEST_CASE("demonstration set validation") {
  FitFixture fx = make_fixture(41);

  SUBCASE("well-formed set passes") { CHECK_NOTHROW(fx.batch.validate()); }
  SUBCASE("empty demos are rejected") {
    fx.batch.demos.clear();
    CHECK_THROWS_AS(fx.batch.validate(), ConfigError);
  }
  SUBCASE("feature matrix count must match scenarios") {
    fx.batch.risk_features.pop_back();
    CHECK_THROWS_AS(fx.batch.validate(), ShapeError);
  }
  SUBCASE("feature rows must match vehicle count") {
    fx.batch.risk_features[0].conservativeResize(1, Eigen::NoChange);
    CHECK_THROWS_AS(fx.batch.validate(), ShapeError);
  }
  SUBCASE("scenario reference must exist") {
    fx.batch.demos[0].scenario = 5;
    CHECK_THROWS_AS(fx.batch.validate(), ConfigError);
  }
  SUBCASE("vehicle reference must exist") {
    fx.batch.demos[0].vehicle = 2;
    CHECK_THROWS_AS(fx.batch.validate(), ConfigError);
  }
  SUBCASE("target must span the scenario horizon") {
    fx.batch.demos[0].target.pop_back();
    CHECK_THROWS_AS(fx.batch.validate(), ShapeError);
  }
}

TEST_CASE("fit holds still at a stationary point") {
  const FitFixture fx = make_fixture(43);
  FitConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e-2;
  cfg.planner = fx.planner;

  const FitResult result = fit_cost_parameters(fx.batch, fx.decoder, cfg);
  REQUIRE(result.curve.size() == 3);
  for (int e = 0; e < 3; ++e) {
    CHECK(result.curve[e].epoch == e);
    CHECK(result.curve[e].loss == 0.0);
    CHECK(result.curve[e].grad_norm == 0.0);
  }
  CHECK(result.decoder.W == fx.decoder.W);
  CHECK(result.decoder.b == fx.decoder.b);
  CHECK(evaluate_decoder_ade(fx.batch, fx.decoder, fx.planner) == 0.0);
}

TEST_CASE("fit improves a perturbed decoder") {
  const FitFixture fx = make_fixture(47);
  const DecoderParams init = perturbed(fx.decoder, 48, 0.35);
  FitConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 0.1;
  cfg.planner = fx.planner;

  const double ade_before = evaluate_decoder_ade(fx.batch, init, fx.planner);
  REQUIRE(ade_before > 0.0);
  const FitResult result = fit_cost_parameters(fx.batch, init, cfg);
  const double ade_after = evaluate_decoder_ade(fx.batch, result.decoder, fx.planner);

  CHECK(result.curve.front().loss > result.curve.back().loss);
  CHECK(ade_after < 0.5 * ade_before);
}

TEST_CASE("fit is deterministic") {
  const FitFixture fx = make_fixture(53);
  const DecoderParams init = perturbed(fx.decoder, 54, 0.3);
  FitConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.05;
  cfg.planner = fx.planner;

  const FitResult a = fit_cost_parameters(fx.batch, init, cfg);
  const FitResult b = fit_cost_parameters(fx.batch, init, cfg);
  CHECK(a.decoder.W == b.decoder.W);
  CHECK(a.decoder.b == b.decoder.b);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t e = 0; e < a.curve.size(); ++e) {
    CHECK(a.curve[e].loss == b.curve[e].loss);
    CHECK(a.curve[e].grad_norm == b.curve[e].grad_norm);
  }
}

TEST_CASE("fit reports divergence with the last stable epoch") {
  const FitFixture fx = make_fixture(59);
  const DecoderParams init = perturbed(fx.decoder, 60, 0.35);
  FitConfig cfg;
  cfg.planner = fx.planner;

  SUBCASE("threshold breached on the first epoch") {
    cfg.epochs = 10;
    cfg.learning_rate = 0.05;
    cfg.divergence_threshold = 1e-12;
    try {
      fit_cost_parameters(fx.batch, init, cfg);
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(e.last_stable_epoch() == -1);
    }
  }
  SUBCASE("oversized steps blow up after a stable start") {
    FitConfig probe = cfg;
    probe.epochs = 1;
    probe.learning_rate = 1e-6;
    const double initial_loss =
        fit_cost_parameters(fx.batch, init, probe).curve[0].loss;

    cfg.epochs = 500;
    cfg.learning_rate = 20.0;
    cfg.divergence_threshold = 2.0 * initial_loss;
    try {
      fit_cost_parameters(fx.batch, init, cfg);
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(e.last_stable_epoch() >= 0);
    }
  }
}

TEST_CASE("fit config validation") {
  const FitFixture fx = make_fixture(61);
  FitConfig cfg;
  cfg.planner = fx.planner;

  SUBCASE("zero epochs returns the initial decoder") {
    cfg.epochs = 0;
    const FitResult result = fit_cost_parameters(fx.batch, fx.decoder, cfg);
    CHECK(result.curve.empty());
    CHECK(result.decoder.W == fx.decoder.W);
    CHECK(result.decoder.b == fx.decoder.b);
  }
  SUBCASE("negative epochs are rejected") {
    cfg.epochs = -1;
    CHECK_THROWS_AS(fit_cost_parameters(fx.batch, fx.decoder, cfg), ConfigError);
  }
  SUBCASE("learning rate must be positive") {
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(fit_cost_parameters(fx.batch, fx.decoder, cfg), ConfigError);
  }
  SUBCASE("decoder horizon must match the planner") {
    cfg.planner.horizon = 6;
    CHECK_THROWS_AS(fit_cost_parameters(fx.batch, fx.decoder, cfg), ShapeError);
    CHECK_THROWS_AS(evaluate_decoder_ade(fx.batch, fx.decoder, cfg.planner),
                    ShapeError);
  }
}
