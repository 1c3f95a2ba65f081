#pragma once

#include <span>
#include <vector>

#include "riskmm/geometry.hpp"
#include "riskmm/grid.hpp"
#include "riskmm/losses.hpp"
#include "riskmm/planner.hpp"

namespace riskmm::metrics {

struct ScoredBox {
  OrientedBox box;
  double score = 0.0;
};

struct DetectionSet {
  std::vector<ScoredBox> boxes;
  int frame_id = 0;

  void validate() const;  // ConfigError on bad scores/sizes
};

/// Exact IoU of two oriented rectangles via convex polygon clipping.
double oriented_iou(const OrientedBox& a, const OrientedBox& b);

struct TruePositive {
  int detection = -1;
  int ground_truth = -1;
  double iou = 0.0;
  double min_fde = 0.0;  // meters; filled by the caller's prediction pairing
};

struct MatchResult {
  std::vector<TruePositive> tp;
  std::vector<int> fp;  // unmatched detection indices
  std::vector<int> fn;  // unmatched ground-truth indices

  int num_gt() const { return static_cast<int>(tp.size() + fn.size()); }
  int num_fp() const { return static_cast<int>(fp.size()); }
};

/// Greedy score-descending matching; each ground truth used at most once.
MatchResult match_detections(const DetectionSet& dets,
                             std::span<const OrientedBox> gts,
                             double iou_threshold = 0.5);

/// Area under the precision-recall curve with a monotone precision envelope.
/// The empty-vs-empty case (no detections, no ground truth) scores 1.
double average_precision(const DetectionSet& dets,
                         std::span<const OrientedBox> gts,
                         double iou_threshold = 0.5);

/// (N_TP_hat - alpha * N_FP) / N_GT, counting true positives whose prediction
/// final displacement error is strictly below tau. May be negative.
double epa(const MatchResult& match, double tau = 2.0, double alpha = 0.5);

/// Precision-recall area over 100 uniform score thresholds on pooled cells.
double occupancy_auc(const OccupancyGrid& pred, const OccupancyGrid& gt);

enum class SoftIouMode {
  kAsPrinted,  // denominator O + Ohat + O*Ohat
  kStandard,   // denominator O + Ohat - O*Ohat
};

struct SoftIouReport {
  double value = 0.0;
  std::vector<int> zero_denominator_steps;  // contributed 0 to the average
};

SoftIouReport soft_iou(const OccupancyGrid& pred, const OccupancyGrid& gt,
                       SoftIouMode mode = SoftIouMode::kAsPrinted);

/// Mean Euclidean error over future steps only (planned.points[0] is "now"
/// and is excluded; gt_future starts one step ahead).
double ade(const PlannedTrajectory& planned, const Trajectory& gt_future);

struct ScenarioPlan {
  PlannedTrajectory ego;
  std::vector<Trajectory> others;  // true trajectories, same horizon
};

/// Fraction of scenarios whose ego plan passes strictly closer than
/// `threshold` (center distance) to any other vehicle at any step.
double collision_rate(std::span<const ScenarioPlan> scenarios,
                      double threshold = 4.0);

}  // namespace riskmm::metrics
