#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "riskmm/dynamics.hpp"
#include "riskmm/grid.hpp"

namespace riskmm {

struct Scenario;

inline constexpr double kEpsPd = 1e-4;
inline constexpr double kPositiveMapSharpness = 50.0;
inline constexpr double kMphToMps = 0.44704;
inline constexpr double kVMaxDefault = 80.0 * kMphToMps;  // 35.7632 m/s

/// Smooth positive map applied to learned Q/R diagonals: a sharpened softplus
/// log(1 + exp(k*x)) / k that is ~x for x >= a few 1/k and ~0 below zero.
double positive_map(double x);
double positive_map_derivative(double x);

/// Per-step cost weights after positive-definiteness regularization.
struct StepWeights {
  Eigen::Vector4d q_diag;    // >= eps_pd
  Eigen::Matrix2d R;         // symmetric, regularized diagonal
  Eigen::RowVector4d G;
  Eigen::RowVector2d H;
};

/// Layout of `cost_row` (14 entries): [0..3] Q diagonal, [4..7] R row-major,
/// [8..11] G, [12..13] H. Q and R diagonals pass through positive_map + eps_pd;
/// R is symmetrized as (R + R^T)/2.
StepWeights assemble_weights(const Eigen::VectorXd& cost_row);
std::vector<StepWeights> assemble_weight_sequence(const Eigen::MatrixXd& cost_slice);

/// Single affine layer mapping per-vehicle risk features (C) to T*14 cost
/// parameters.
struct DecoderParams {
  Eigen::MatrixXd W;  // (T*14) x C
  Eigen::VectorXd b;  // T*14

  int horizon() const { return static_cast<int>(b.size()) / kCostParamsPerStep; }
  void validate() const;
};

CostMap decode_cost_map(const Eigen::MatrixXd& risk_features,
                        const DecoderParams& decoder);

/// Saddle system for min z^T D z + Gt^T z s.t. At z = Bt, with z the stacked
/// states and controls [X_0..X_{T-1}, U_0..U_{T-1}]. Qt stores 2D so the
/// stationarity row of the KKT matrix is exactly Qt z + At^T lambda = -Gt.
/// Gt keeps the negated linear terms [-G_0, .., -G_{T-1}, -H_0, .., -H_{T-1}].
struct KKTSystem {
  Eigen::MatrixXd Qt;  // 6T x 6T
  Eigen::MatrixXd At;  // 4T x 6T
  Eigen::VectorXd Gt;  // 6T
  Eigen::VectorXd Bt;  // 4T
  int horizon = 0;

  int num_primal() const { return 6 * horizon; }
  int num_dual() const { return 4 * horizon; }
};

/// Constraint rows: X_0 = x0 (first four), then X_{k+1} - A_k X_k - B_k U_k = 0.
KKTSystem assemble_kkt(std::span<const StepWeights> weights,
                       const LinearizedDynamics& dyn, const PlanState& x0);

/// Stacked solution [states (4T), controls (2T), multipliers (4T)].
struct PlannerSolution {
  Eigen::VectorXd decision;
  double kkt_residual = 0.0;
  double min_pivot = 0.0;
  std::vector<int> active_speed_steps;
  int horizon = 0;

  Eigen::Vector4d state(int k) const { return decision.segment<4>(4 * k); }
  Eigen::Vector2d control(int k) const {
    return decision.segment<2>(4 * horizon + 2 * k);
  }
  double speed(int k) const { return decision[4 * k + 1]; }
  Eigen::VectorXd primal() const { return decision.head(6 * horizon); }
};

/// Direct dense factorization of the symmetric saddle matrix; one step of
/// iterative refinement. Throws SingularKKT with the smallest pivot magnitude.
PlannerSolution solve_kkt(const KKTSystem& sys);

/// Active-set treatment of |v_k| <= v_max: repeatedly pin the most-violating
/// speed to its bound via an extra equality row and re-solve. Idempotent;
/// throws InfeasibleConstraint when a pinned system becomes singular.
PlannerSolution enforce_speed_constraint(const PlannerSolution& sol,
                                         const KKTSystem& sys, double v_max);

/// Objective value the solver minimizes: 1/2 z^T Qt z + Gt^T z.
double kkt_objective(const KKTSystem& sys, const Eigen::VectorXd& z);

struct PlannedPoint {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

struct PlannedTrajectory {
  int vehicle_id = -1;
  std::vector<PlannedPoint> points;  // length T, points[0] is "now"
};

struct PlannerConfig {
  double dt = 0.5;
  int horizon = 7;
  double v_max = kVMaxDefault;
  // Re-linearize once around the first solution's speed profile.
  bool relinearize = false;
};

struct PlanResult {
  PlannedTrajectory trajectory;
  PlannerSolution solution;
};

/// Full pipeline for one vehicle: weight assembly, linearization at the
/// current speed, KKT solve, speed-constraint enforcement, and the ego-frame
/// to world-frame transform of (s, l, phi, v).
PlanResult plan_vehicle(const Scenario& scenario, int vehicle_index,
                        const Eigen::MatrixXd& cost_slice,
                        const PlannerConfig& cfg);

PlannedTrajectory plan(const Scenario& scenario, int vehicle_index,
                       const Eigen::MatrixXd& cost_slice,
                       const PlannerConfig& cfg);

}  // namespace riskmm
