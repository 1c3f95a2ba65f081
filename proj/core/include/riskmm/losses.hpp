#pragma once

#include <span>

#include "riskmm/grid.hpp"
#include "riskmm/planner.hpp"
#include "riskmm/scenario.hpp"

namespace riskmm {

using Trajectory = std::vector<Pose>;

struct LossConfig {
  double w_l = 0.5;  // flow-loss weight where the ground truth is exactly 0
  double w_h = 2.0;  // flow-loss weight elsewhere
  double smooth_l1_beta = 1.0;
  double collision_weight = 0.0;
  double collision_threshold = 4.0;  // meters, center distance
  double dice_smoothing = 1.0;

  void validate() const;
};

/// Mean squared Euclidean position error over all steps.
double mse_planning_loss(const PlannedTrajectory& planned, const Trajectory& demo);

/// Sum over steps and other vehicles of max(0, threshold - distance)^2,
/// unweighted (callers scale by collision_weight).
double collision_penalty(const PlannedTrajectory& planned,
                         std::span<const Trajectory> others,
                         const LossConfig& cfg);

/// Mean binary cross-entropy (predictions clamped to [1e-7, 1-1e-7]) plus a
/// Dice loss pooled over all steps and cells.
double occupancy_loss(const OccupancyGrid& pred, const OccupancyGrid& gt,
                      const LossConfig& cfg);

/// Smooth-L1 per element, weighted w_l where the ground-truth element is
/// exactly zero and w_h otherwise; mean over all elements.
double flow_loss(const FlowField& pred, const FlowField& gt, const LossConfig& cfg);

}  // namespace riskmm
