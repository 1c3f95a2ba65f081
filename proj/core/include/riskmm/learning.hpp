#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "riskmm/losses.hpp"
#include "riskmm/planner.hpp"
#include "riskmm/scenario.hpp"

namespace riskmm {

struct Demonstration {
  int scenario = 0;  // index into DemonstrationSet::scenarios
  int vehicle = 0;
  Trajectory target;  // T world-frame poses
};

struct DemonstrationSet {
  std::vector<Scenario> scenarios;
  std::vector<Eigen::MatrixXd> risk_features;  // per scenario, N x C
  std::vector<Demonstration> demos;
  /// Cost slices the demonstrations were planned with, kept for recovery
  /// evaluation; one T x 14 matrix per behavior archetype.
  std::vector<Eigen::MatrixXd> generating_weights;

  void validate() const;
};

/// Planning loss (MSE vs target, optionally + collision_weight * penalty
/// against `others`) with its gradient against the vehicle's T x 14 cost
/// slice, computed through the KKT solve by the adjoint method.
struct PlanningLossGrad {
  double loss = 0.0;
  Eigen::MatrixXd slice_grad;  // T x 14
  bool on_constraint_boundary = false;
  PlannedTrajectory trajectory;
  PlannerSolution solution;
};

PlanningLossGrad planning_loss_with_gradient(const Scenario& scenario,
                                             int vehicle_index,
                                             const Eigen::MatrixXd& cost_slice,
                                             const Trajectory& target,
                                             std::span<const Trajectory> others,
                                             const PlannerConfig& planner_cfg,
                                             const LossConfig& loss_cfg);

struct GradientReport {
  Eigen::VectorXd analytic;           // row-major over the T x 14 slice
  Eigen::VectorXd finite_difference;  // central differences, step 1e-5
  Eigen::VectorXd rel_errors;         // |a-f| / max(|a|, |f|, 1e-8)
  double max_rel_error = 0.0;
  bool on_constraint_boundary = false;
};

GradientReport grad_through_planner(const Scenario& scenario, int vehicle_index,
                                    const Eigen::MatrixXd& cost_slice,
                                    const Trajectory& target,
                                    const PlannerConfig& planner_cfg,
                                    const LossConfig& loss_cfg);

struct FitConfig {
  int epochs = 200;
  double learning_rate = 1e-2;
  double collision_weight = 0.0;  // > 0 adds the collision penalty term
  double divergence_threshold = 1e6;
  PlannerConfig planner;
  LossConfig loss;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct FitResult {
  DecoderParams decoder;
  std::vector<EpochRecord> curve;
};

/// Plain gradient descent on the mean planning loss over the batch, updating
/// the shared cost-map decoder. Fixed iteration order; deterministic.
/// Throws DivergenceError carrying the last stable epoch when the loss
/// exceeds divergence_threshold or becomes non-finite.
FitResult fit_cost_parameters(const DemonstrationSet& batch,
                              const DecoderParams& init, const FitConfig& cfg);

/// Mean ADE of planner outputs under `decoder` against the demo targets.
double evaluate_decoder_ade(const DemonstrationSet& batch,
                            const DecoderParams& decoder,
                            const PlannerConfig& planner_cfg);

}  // namespace riskmm
