#include "riskmm/losses.hpp"

#include <algorithm>
#include <cmath>

#include "riskmm/errors.hpp"

namespace riskmm {

namespace {

constexpr double kBceClamp = 1e-7;

double smooth_l1(double err, double beta) {
  const double a = std::abs(err);
  return a < beta ? 0.5 * a * a / beta : a - 0.5 * beta;
}

}  // namespace

void LossConfig::validate() const {
  if (w_l <= 0.0 || w_h <= 0.0) throw ConfigError("flow weights must be positive");
  if (smooth_l1_beta <= 0.0) throw ConfigError("smooth_l1_beta must be positive");
  if (collision_weight < 0.0) throw ConfigError("collision_weight must be nonnegative");
  if (collision_threshold < 0.0)
    throw ConfigError("collision_threshold must be nonnegative");
  if (dice_smoothing <= 0.0) throw ConfigError("dice_smoothing must be positive");
}

double mse_planning_loss(const PlannedTrajectory& planned, const Trajectory& demo) {
  if (planned.points.size() != demo.size() || demo.empty())
    throw ShapeError("planned and demonstration lengths must match");
  double sum = 0.0;
  for (std::size_t k = 0; k < demo.size(); ++k) {
    const double dx = planned.points[k].x - demo[k].x;
    const double dy = planned.points[k].y - demo[k].y;
    sum += dx * dx + dy * dy;
  }
  return sum / static_cast<double>(demo.size());
}

double collision_penalty(const PlannedTrajectory& planned,
                         std::span<const Trajectory> others,
                         const LossConfig& cfg) {
  cfg.validate();
  double sum = 0.0;
  for (const Trajectory& other : others) {
    if (other.size() != planned.points.size())
      throw ShapeError("collision penalty requires synchronized trajectories");
    for (std::size_t k = 0; k < other.size(); ++k) {
      const double dx = planned.points[k].x - other[k].x;
      const double dy = planned.points[k].y - other[k].y;
      const double gap = cfg.collision_threshold - std::hypot(dx, dy);
      if (gap > 0.0) sum += gap * gap;
    }
  }
  return sum;
}

double occupancy_loss(const OccupancyGrid& pred, const OccupancyGrid& gt,
                      const LossConfig& cfg) {
  cfg.validate();
  if (pred.steps.size() != gt.steps.size() || pred.steps.empty())
    throw ShapeError("occupancy grids must have matching horizons");
  double bce = 0.0, inter = 0.0, pred_sum = 0.0, gt_sum = 0.0;
  long cells = 0;
  for (std::size_t t = 0; t < pred.steps.size(); ++t) {
    if (pred.steps[t].rows() != gt.steps[t].rows() ||
        pred.steps[t].cols() != gt.steps[t].cols())
      throw ShapeError("occupancy grids must have matching shapes");
    const auto& p = pred.steps[t];
    const auto& g = gt.steps[t];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double pc = std::clamp(p(i), kBceClamp, 1.0 - kBceClamp);
      const double gc = g(i);
      bce -= gc * std::log(pc) + (1.0 - gc) * std::log(1.0 - pc);
      inter += pc * gc;
      pred_sum += pc;
      gt_sum += gc;
    }
    cells += p.size();
  }
  const double dice =
      1.0 - (2.0 * inter + cfg.dice_smoothing) / (pred_sum + gt_sum + cfg.dice_smoothing);
  return bce / static_cast<double>(cells) + dice;
}

double flow_loss(const FlowField& pred, const FlowField& gt, const LossConfig& cfg) {
  cfg.validate();
  if (pred.steps.size() != gt.steps.size() || pred.steps.empty())
    throw ShapeError("flow fields must have matching horizons");
  double sum = 0.0;
  long count = 0;
  for (std::size_t t = 0; t < pred.steps.size(); ++t) {
    const Eigen::MatrixXd* pc[2] = {&pred.steps[t].d_row, &pred.steps[t].d_col};
    const Eigen::MatrixXd* gc[2] = {&gt.steps[t].d_row, &gt.steps[t].d_col};
    for (int c = 0; c < 2; ++c) {
      if (pc[c]->rows() != gc[c]->rows() || pc[c]->cols() != gc[c]->cols())
        throw ShapeError("flow fields must have matching shapes");
      for (Eigen::Index i = 0; i < pc[c]->size(); ++i) {
        const double w = ((*gc[c])(i) == 0.0) ? cfg.w_l : cfg.w_h;
        sum += w * smooth_l1((*pc[c])(i) - (*gc[c])(i), cfg.smooth_l1_beta);
        ++count;
      }
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace riskmm
