#include "riskmm/learning.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>

#include "riskmm/errors.hpp"
#include "riskmm/metrics.hpp"

namespace riskmm {

namespace {

Eigen::MatrixXd decode_single(const DecoderParams& decoder,
                              const Eigen::VectorXd& features) {
  const Eigen::VectorXd z = decoder.W * features + decoder.b;
  Eigen::MatrixXd slice(decoder.horizon(), kCostParamsPerStep);
  for (int t = 0; t < decoder.horizon(); ++t)
    slice.row(t) = z.segment(t * kCostParamsPerStep, kCostParamsPerStep).transpose();
  return slice;
}

std::vector<Trajectory> other_true_trajectories(const Scenario& scenario,
                                                int vehicle_index) {
  std::vector<Trajectory> others;
  for (int j = 0; j < scenario.vehicle_count(); ++j) {
    if (j == vehicle_index) continue;
    const VehicleRecord& v = scenario.vehicles[j];
    Trajectory t;
    t.reserve(v.gt_future.size() + 1);
    t.push_back(v.true_pose);
    t.insert(t.end(), v.gt_future.begin(), v.gt_future.end());
    others.push_back(std::move(t));
  }
  return others;
}

double planning_loss_only(const Scenario& scenario, int vehicle_index,
                          const Eigen::MatrixXd& cost_slice,
                          const Trajectory& target,
                          std::span<const Trajectory> others,
                          const PlannerConfig& planner_cfg,
                          const LossConfig& loss_cfg) {
  const PlannedTrajectory traj = plan(scenario, vehicle_index, cost_slice, planner_cfg);
  double loss = mse_planning_loss(traj, target);
  if (loss_cfg.collision_weight > 0.0)
    loss += loss_cfg.collision_weight * collision_penalty(traj, others, loss_cfg);
  return loss;
}

Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    v.segment(r * m.cols(), m.cols()) = m.row(r).transpose();
  return v;
}

}  // namespace

void DemonstrationSet::validate() const {
  if (demos.empty()) throw ConfigError("demonstration set must not be empty");
  if (risk_features.size() != scenarios.size())
    throw ShapeError("one risk-feature matrix required per scenario");
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    if (risk_features[s].rows() != scenarios[s].vehicle_count())
      throw ShapeError("risk-feature rows must match vehicle count");
  }
  for (const Demonstration& d : demos) {
    if (d.scenario < 0 || d.scenario >= static_cast<int>(scenarios.size()))
      throw ConfigError("demonstration references a missing scenario");
    const Scenario& sc = scenarios[d.scenario];
    if (d.vehicle < 0 || d.vehicle >= sc.vehicle_count())
      throw ConfigError("demonstration references a missing vehicle");
    if (static_cast<int>(d.target.size()) != sc.horizon)
      throw ShapeError("demonstration target must span the scenario horizon");
  }
}

PlanningLossGrad planning_loss_with_gradient(const Scenario& scenario,
                                             int vehicle_index,
                                             const Eigen::MatrixXd& cost_slice,
                                             const Trajectory& target,
                                             std::span<const Trajectory> others,
                                             const PlannerConfig& planner_cfg,
                                             const LossConfig& loss_cfg) {
  loss_cfg.validate();
  PlanResult planned = plan_vehicle(scenario, vehicle_index, cost_slice, planner_cfg);
  const PlannerSolution& sol = planned.solution;
  const int T = planner_cfg.horizon;
  const int n = 6 * T, m = 4 * T;
  const int p = static_cast<int>(sol.active_speed_steps.size());

  PlanningLossGrad out;
  out.loss = mse_planning_loss(planned.trajectory, target);
  if (loss_cfg.collision_weight > 0.0)
    out.loss += loss_cfg.collision_weight *
                collision_penalty(planned.trajectory, others, loss_cfg);
  out.on_constraint_boundary = p > 0;

  // Loss gradient with respect to world positions, mapped into (s, l).
  const Pose& ref = scenario.vehicles[vehicle_index].pose;
  const double c = std::cos(ref.heading), s = std::sin(ref.heading);
  Eigen::VectorXd grad_y = Eigen::VectorXd::Zero(n + m + p);
  for (int k = 0; k < T; ++k) {
    const PlannedPoint& pt = planned.trajectory.points[k];
    double gx = 2.0 * (pt.x - target[k].x) / T;
    double gy = 2.0 * (pt.y - target[k].y) / T;
    if (loss_cfg.collision_weight > 0.0) {
      for (const Trajectory& other : others) {
        const double dx = pt.x - other[k].x;
        const double dy = pt.y - other[k].y;
        const double dist = std::hypot(dx, dy);
        const double gap = loss_cfg.collision_threshold - dist;
        if (gap > 0.0 && dist > 0.0) {
          const double scale = -2.0 * loss_cfg.collision_weight * gap / dist;
          gx += scale * dx;
          gy += scale * dy;
        }
      }
    }
    grad_y[4 * k] = c * gx + s * gy;        // d/ds
    grad_y[4 * k + 2] = -s * gx + c * gy;   // d/dl
  }

  // Adjoint solve on the final (possibly pinned) saddle system.
  Eigen::MatrixXd At_aug = Eigen::MatrixXd::Zero(m + p, n);
  {
    const KKTSystem sys = [&] {
      const PlanState x0{0.0, ref.speed, 0.0, 0.0};
      const auto weights = assemble_weight_sequence(cost_slice);
      const auto dyn = linearize(x0, T, planner_cfg.dt,
                                 scenario.vehicles[vehicle_index].l_fr);
      return assemble_kkt(weights, dyn, x0);
    }();
    At_aug.topRows(m) = sys.At;
    for (int i = 0; i < p; ++i)
      At_aug(m + i, 4 * sol.active_speed_steps[i] + 1) = 1.0;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m + p, n + m + p);
    M.topLeftCorner(n, n) = sys.Qt;
    M.topRightCorner(n, m + p) = At_aug.transpose();
    M.bottomLeftCorner(m + p, n) = At_aug;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    if (!(pivots.minCoeff() > pivots.maxCoeff() * 1e-12))
      throw SingularKKT(pivots.minCoeff());
    Eigen::VectorXd mu = lu.solve(grad_y);
    mu += lu.solve(grad_y - M * mu);

    const Eigen::VectorXd& y = sol.decision;
    out.slice_grad = Eigen::MatrixXd::Zero(T, kCostParamsPerStep);
    const int uc = 4 * T;
    for (int t = 0; t < T; ++t) {
      for (int d = 0; d < 4; ++d) {
        const int i = 4 * t + d;
        out.slice_grad(t, d) =
            -2.0 * positive_map_derivative(cost_slice(t, d)) * mu[i] * y[i];
        out.slice_grad(t, 8 + d) = mu[i];
      }
      const int i0 = uc + 2 * t, i1 = uc + 2 * t + 1;
      out.slice_grad(t, 4) =
          -2.0 * positive_map_derivative(cost_slice(t, 4)) * mu[i0] * y[i0];
      out.slice_grad(t, 7) =
          -2.0 * positive_map_derivative(cost_slice(t, 7)) * mu[i1] * y[i1];
      const double off = -(mu[i0] * y[i1] + mu[i1] * y[i0]);
      out.slice_grad(t, 5) = off;
      out.slice_grad(t, 6) = off;
      out.slice_grad(t, 12) = mu[i0];
      out.slice_grad(t, 13) = mu[i1];
    }
  }

  out.trajectory = std::move(planned.trajectory);
  out.solution = std::move(planned.solution);
  return out;
}

GradientReport grad_through_planner(const Scenario& scenario, int vehicle_index,
                                    const Eigen::MatrixXd& cost_slice,
                                    const Trajectory& target,
                                    const PlannerConfig& planner_cfg,
                                    const LossConfig& loss_cfg) {
  const std::vector<Trajectory> others =
      other_true_trajectories(scenario, vehicle_index);
  const PlanningLossGrad analytic = planning_loss_with_gradient(
      scenario, vehicle_index, cost_slice, target, others, planner_cfg, loss_cfg);

  constexpr double kStep = 1e-5;
  GradientReport report;
  report.on_constraint_boundary = analytic.on_constraint_boundary;
  report.analytic = flatten_row_major(analytic.slice_grad);
  report.finite_difference.resize(report.analytic.size());
  report.rel_errors.resize(report.analytic.size());
  for (int t = 0; t < cost_slice.rows(); ++t) {
    for (int j = 0; j < kCostParamsPerStep; ++j) {
      Eigen::MatrixXd mod = cost_slice;
      mod(t, j) = cost_slice(t, j) + kStep;
      const double up = planning_loss_only(scenario, vehicle_index, mod, target,
                                           others, planner_cfg, loss_cfg);
      mod(t, j) = cost_slice(t, j) - kStep;
      const double down = planning_loss_only(scenario, vehicle_index, mod, target,
                                             others, planner_cfg, loss_cfg);
      const int idx = t * kCostParamsPerStep + j;
      report.finite_difference[idx] = (up - down) / (2.0 * kStep);
      const double a = report.analytic[idx], f = report.finite_difference[idx];
      report.rel_errors[idx] =
          std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-8});
    }
  }
  report.max_rel_error = report.rel_errors.maxCoeff();
  return report;
}

FitResult fit_cost_parameters(const DemonstrationSet& batch,
                              const DecoderParams& init, const FitConfig& cfg) {
  batch.validate();
  init.validate();
  if (cfg.epochs < 0) throw ConfigError("epoch count must be nonnegative");
  if (cfg.learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (init.horizon() != cfg.planner.horizon)
    throw ShapeError("decoder horizon must match the planner horizon");
  LossConfig loss_cfg = cfg.loss;
  loss_cfg.collision_weight = cfg.collision_weight;

  FitResult result;
  result.decoder = init;
  result.curve.reserve(cfg.epochs);
  const double inv_n = 1.0 / static_cast<double>(batch.demos.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total_loss = 0.0;
    Eigen::MatrixXd dW = Eigen::MatrixXd::Zero(init.W.rows(), init.W.cols());
    Eigen::VectorXd db = Eigen::VectorXd::Zero(init.b.size());
    for (const Demonstration& demo : batch.demos) {
      const Scenario& sc = batch.scenarios[demo.scenario];
      const Eigen::VectorXd f =
          batch.risk_features[demo.scenario].row(demo.vehicle).transpose();
      const Eigen::MatrixXd slice = decode_single(result.decoder, f);
      const std::vector<Trajectory> others =
          cfg.collision_weight > 0.0 ? other_true_trajectories(sc, demo.vehicle)
                                     : std::vector<Trajectory>{};
      const PlanningLossGrad g = planning_loss_with_gradient(
          sc, demo.vehicle, slice, demo.target, others, cfg.planner, loss_cfg);
      total_loss += g.loss;
      const Eigen::VectorXd vg = flatten_row_major(g.slice_grad);
      dW.noalias() += vg * f.transpose();
      db += vg;
    }
    const double mean_loss = total_loss * inv_n;
    if (!std::isfinite(mean_loss) || mean_loss > cfg.divergence_threshold)
      throw DivergenceError(epoch - 1);
    dW *= inv_n;
    db *= inv_n;
    const double grad_norm = std::sqrt(dW.squaredNorm() + db.squaredNorm());
    result.curve.push_back({epoch, mean_loss, grad_norm});
    result.decoder.W -= cfg.learning_rate * dW;
    result.decoder.b -= cfg.learning_rate * db;
  }
  return result;
}

double evaluate_decoder_ade(const DemonstrationSet& batch,
                            const DecoderParams& decoder,
                            const PlannerConfig& planner_cfg) {
  batch.validate();
  decoder.validate();
  if (decoder.horizon() != planner_cfg.horizon)
    throw ShapeError("decoder horizon must match the planner horizon");
  double sum = 0.0;
  for (const Demonstration& demo : batch.demos) {
    const Scenario& sc = batch.scenarios[demo.scenario];
    const Eigen::VectorXd f =
        batch.risk_features[demo.scenario].row(demo.vehicle).transpose();
    const PlannedTrajectory traj =
        plan(sc, demo.vehicle, decode_single(decoder, f), planner_cfg);
    const Trajectory future(demo.target.begin() + 1, demo.target.end());
    sum += metrics::ade(traj, future);
  }
  return sum / static_cast<double>(batch.demos.size());
}

}  // namespace riskmm
