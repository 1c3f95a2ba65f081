#include "riskmm/planner.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <string>

#include "riskmm/errors.hpp"
#include "riskmm/scenario.hpp"

namespace riskmm {

namespace {

struct SaddleSolve {
  Eigen::VectorXd y;
  double residual = 0.0;
  double min_pivot = 0.0;
};

SaddleSolve solve_saddle(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  SaddleSolve out;
  out.min_pivot = pivots.minCoeff();
  if (!(out.min_pivot > pivots.maxCoeff() * 1e-12)) throw SingularKKT(out.min_pivot);
  out.y = lu.solve(rhs);
  out.y += lu.solve(rhs - M * out.y);
  out.residual = (M * out.y - rhs).lpNorm<Eigen::Infinity>();
  return out;
}

Eigen::MatrixXd saddle_matrix(const Eigen::MatrixXd& Qt, const Eigen::MatrixXd& At) {
  const Eigen::Index n = Qt.rows(), m = At.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = Qt;
  M.topRightCorner(n, m) = At.transpose();
  M.bottomLeftCorner(m, n) = At;
  return M;
}

}  // namespace

double positive_map(double x) {
  const double u = kPositiveMapSharpness * x;
  return (std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)))) /
         kPositiveMapSharpness;
}

double positive_map_derivative(double x) {
  const double u = kPositiveMapSharpness * x;
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

StepWeights assemble_weights(const Eigen::VectorXd& cost_row) {
  if (cost_row.size() != kCostParamsPerStep)
    throw ShapeError("cost row must have exactly 14 entries");
  if (!cost_row.allFinite()) throw NumericError("cost row must be finite");
  StepWeights w;
  for (int i = 0; i < 4; ++i) w.q_diag[i] = positive_map(cost_row[i]) + kEpsPd;
  const double r00 = positive_map(cost_row[4]);
  const double r11 = positive_map(cost_row[7]);
  const double off = 0.5 * (cost_row[5] + cost_row[6]);
  w.R << r00 + kEpsPd, off, off, r11 + kEpsPd;
  w.G = cost_row.segment<4>(8).transpose();
  w.H = cost_row.segment<2>(12).transpose();
  return w;
}

std::vector<StepWeights> assemble_weight_sequence(const Eigen::MatrixXd& cost_slice) {
  if (cost_slice.cols() != kCostParamsPerStep)
    throw ShapeError("cost slice must have 14 columns");
  std::vector<StepWeights> out;
  out.reserve(cost_slice.rows());
  for (Eigen::Index t = 0; t < cost_slice.rows(); ++t)
    out.push_back(assemble_weights(cost_slice.row(t).transpose()));
  return out;
}

void DecoderParams::validate() const {
  if (b.size() == 0 || W.rows() != b.size())
    throw ShapeError("decoder weight rows must match bias length");
  if (b.size() % kCostParamsPerStep != 0)
    throw ShapeError("decoder output length must be a multiple of 14");
  if (!W.allFinite() || !b.allFinite())
    throw NumericError("decoder parameters must be finite");
}

CostMap decode_cost_map(const Eigen::MatrixXd& risk_features,
                        const DecoderParams& decoder) {
  decoder.validate();
  if (risk_features.cols() != decoder.W.cols())
    throw ShapeError("risk feature dimension does not match decoder input");
  if (!risk_features.allFinite()) throw NumericError("risk features must be finite");
  const int T = decoder.horizon();
  CostMap map;
  map.per_vehicle.reserve(risk_features.rows());
  for (Eigen::Index v = 0; v < risk_features.rows(); ++v) {
    const Eigen::VectorXd z =
        decoder.W * risk_features.row(v).transpose() + decoder.b;
    Eigen::MatrixXd slice(T, kCostParamsPerStep);
    for (int t = 0; t < T; ++t)
      slice.row(t) = z.segment(t * kCostParamsPerStep, kCostParamsPerStep).transpose();
    map.per_vehicle.push_back(std::move(slice));
  }
  return map;
}

KKTSystem assemble_kkt(std::span<const StepWeights> weights,
                       const LinearizedDynamics& dyn, const PlanState& x0) {
  const int T = static_cast<int>(weights.size());
  if (T < 2) throw ShapeError("planning horizon must be at least 2");
  if (static_cast<int>(dyn.A.size()) != T - 1 ||
      static_cast<int>(dyn.B.size()) != T - 1)
    throw ShapeError("linearized dynamics must cover horizon-1 steps");

  KKTSystem sys;
  sys.horizon = T;
  const int n = 6 * T, m = 4 * T, uc = 4 * T;  // uc: first control column
  sys.Qt = Eigen::MatrixXd::Zero(n, n);
  sys.At = Eigen::MatrixXd::Zero(m, n);
  sys.Gt = Eigen::VectorXd::Zero(n);
  sys.Bt = Eigen::VectorXd::Zero(m);

  for (int k = 0; k < T; ++k) {
    sys.Qt.block<4, 4>(4 * k, 4 * k) = 2.0 * weights[k].q_diag.asDiagonal();
    sys.Qt.block<2, 2>(uc + 2 * k, uc + 2 * k) = 2.0 * weights[k].R;
    sys.Gt.segment<4>(4 * k) = -weights[k].G.transpose();
    sys.Gt.segment<2>(uc + 2 * k) = -weights[k].H.transpose();
  }

  sys.At.block<4, 4>(0, 0) = Eigen::Matrix4d::Identity();
  sys.Bt.head<4>() = x0.to_vector();
  for (int k = 0; k + 1 < T; ++k) {
    sys.At.block<4, 4>(4 * (k + 1), 4 * k) = -dyn.A[k];
    sys.At.block<4, 4>(4 * (k + 1), 4 * (k + 1)) = Eigen::Matrix4d::Identity();
    sys.At.block<4, 2>(4 * (k + 1), uc + 2 * k) = -dyn.B[k];
  }

  if (!sys.Qt.allFinite() || !sys.At.allFinite() || !sys.Gt.allFinite() ||
      !sys.Bt.allFinite())
    throw NumericError("KKT system contains non-finite entries");
  return sys;
}

PlannerSolution solve_kkt(const KKTSystem& sys) {
  const int n = sys.num_primal(), m = sys.num_dual();
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = -sys.Gt;
  rhs.tail(m) = sys.Bt;
  const SaddleSolve s = solve_saddle(saddle_matrix(sys.Qt, sys.At), rhs);

  PlannerSolution sol;
  sol.horizon = sys.horizon;
  sol.decision = s.y;
  sol.kkt_residual = s.residual;
  sol.min_pivot = s.min_pivot;
  return sol;
}

PlannerSolution enforce_speed_constraint(const PlannerSolution& sol,
                                         const KKTSystem& sys, double v_max) {
  if (v_max < 0.0 || std::isnan(v_max))
    throw ConfigError("v_max must be nonnegative");
  const int T = sys.horizon;
  const int n = sys.num_primal(), m = sys.num_dual();
  constexpr double kTol = 1e-9;

  std::vector<int> pins = sol.active_speed_steps;
  std::vector<double> targets;
  targets.reserve(pins.size());
  for (int k : pins) targets.push_back(sol.speed(k) >= 0.0 ? v_max : -v_max);

  PlannerSolution cur = sol;
  for (int iter = 0; iter <= T; ++iter) {
    int worst = -1;
    double worst_violation = kTol;
    for (int k = 0; k < T; ++k) {
      if (std::find(pins.begin(), pins.end(), k) != pins.end()) continue;
      const double violation = std::abs(cur.speed(k)) - v_max;
      if (violation > worst_violation) {
        worst_violation = violation;
        worst = k;
      }
    }
    if (worst < 0) return cur;

    pins.push_back(worst);
    targets.push_back(cur.speed(worst) >= 0.0 ? v_max : -v_max);
    const int p = static_cast<int>(pins.size());

    Eigen::MatrixXd At_aug = Eigen::MatrixXd::Zero(m + p, n);
    At_aug.topRows(m) = sys.At;
    Eigen::VectorXd rhs(n + m + p);
    rhs.head(n) = -sys.Gt;
    rhs.segment(n, m) = sys.Bt;
    for (int i = 0; i < p; ++i) {
      At_aug(m + i, 4 * pins[i] + 1) = 1.0;
      rhs[n + m + i] = targets[i];
    }

    SaddleSolve s;
    try {
      s = solve_saddle(saddle_matrix(sys.Qt, At_aug), rhs);
    } catch (const SingularKKT&) {
      throw InfeasibleConstraint("speed bound " + std::to_string(v_max) +
                                 " m/s cannot be met at step " +
                                 std::to_string(worst));
    }
    cur.decision = s.y.head(n + m);
    cur.kkt_residual = s.residual;
    cur.min_pivot = s.min_pivot;
    cur.active_speed_steps = pins;
    std::sort(cur.active_speed_steps.begin(), cur.active_speed_steps.end());
  }
  throw InfeasibleConstraint("speed enforcement failed to settle");
}

double kkt_objective(const KKTSystem& sys, const Eigen::VectorXd& z) {
  if (z.size() != sys.num_primal())
    throw ShapeError("objective argument must have 6T entries");
  return 0.5 * z.dot(sys.Qt * z) + sys.Gt.dot(z);
}

PlanResult plan_vehicle(const Scenario& scenario, int vehicle_index,
                        const Eigen::MatrixXd& cost_slice,
                        const PlannerConfig& cfg) {
  if (vehicle_index < 0 || vehicle_index >= scenario.vehicle_count())
    throw ConfigError("vehicle index out of range");
  if (cost_slice.rows() != cfg.horizon)
    throw ShapeError("cost slice rows must equal the planner horizon");
  const VehicleRecord& vehicle = scenario.vehicles[vehicle_index];
  const PlanState x0{0.0, vehicle.pose.speed, 0.0, 0.0};

  const std::vector<StepWeights> weights = assemble_weight_sequence(cost_slice);
  LinearizedDynamics dyn = linearize(x0, cfg.horizon, cfg.dt, vehicle.l_fr);
  KKTSystem sys = assemble_kkt(weights, dyn, x0);
  PlannerSolution sol = enforce_speed_constraint(solve_kkt(sys), sys, cfg.v_max);

  if (cfg.relinearize) {
    std::vector<double> speeds(static_cast<std::size_t>(cfg.horizon) - 1);
    for (int k = 0; k + 1 < cfg.horizon; ++k) speeds[k] = sol.speed(k);
    dyn = linearize_at_speeds(speeds, cfg.dt, vehicle.l_fr);
    sys = assemble_kkt(weights, dyn, x0);
    sol = enforce_speed_constraint(solve_kkt(sys), sys, cfg.v_max);
  }

  PlanResult out;
  out.trajectory.vehicle_id = vehicle.id;
  out.trajectory.points.reserve(cfg.horizon);
  for (int k = 0; k < cfg.horizon; ++k) {
    const Pose p = ego_to_world(vehicle.pose, PlanState::from_vector(sol.state(k)));
    out.trajectory.points.push_back({p.x, p.y, p.heading, p.speed});
  }
  out.solution = std::move(sol);
  return out;
}

PlannedTrajectory plan(const Scenario& scenario, int vehicle_index,
                       const Eigen::MatrixXd& cost_slice,
                       const PlannerConfig& cfg) {
  return plan_vehicle(scenario, vehicle_index, cost_slice, cfg).trajectory;
}

}  // namespace riskmm
