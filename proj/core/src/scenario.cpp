#include "riskmm/scenario.hpp"

#include <cmath>
#include <string>

#include "riskmm/errors.hpp"

namespace riskmm {

namespace {

void check_pose(const Pose& p, const char* what) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.heading) ||
      !std::isfinite(p.speed))
    throw NumericError(std::string(what) + " pose must be finite");
}

}  // namespace

std::vector<Pose> VehicleRecord::true_trajectory() const {
  std::vector<Pose> out;
  out.reserve(gt_future.size() + 1);
  out.push_back(true_pose);
  out.insert(out.end(), gt_future.begin(), gt_future.end());
  return out;
}

void Scenario::validate() const {
  grid.validate();
  if (horizon < 2) throw ConfigError("scenario horizon must be at least 2");
  if (history_len < 1) throw ConfigError("history length must be at least 1");
  if (dt <= 0.0) throw ConfigError("dt must be positive");
  for (const VehicleRecord& v : vehicles) {
    check_pose(v.pose, "reported");
    check_pose(v.true_pose, "true");
    if (v.length <= 0.0 || v.width <= 0.0)
      throw GeometryError("vehicle extents must be positive");
    if (v.l_fr <= 0.0 || v.l_fr >= v.length)
      throw GeometryError("l_fr must lie in (0, length)");
    world_to_cell({v.pose.x, v.pose.y}, grid);  // throws OutOfGrid when outside
    if (static_cast<int>(v.history.size()) != history_len)
      throw ShapeError("vehicle history length does not match scenario");
    if (static_cast<int>(v.gt_future.size()) != horizon - 1)
      throw ShapeError("ground-truth future length does not match horizon");
  }
  if (features.height() > 0) features.validate();
  if (!gt_occupancy.steps.empty()) {
    gt_occupancy.validate(grid);
    if (gt_occupancy.horizon() != horizon)
      throw ShapeError("ground-truth occupancy horizon mismatch");
    if (static_cast<int>(gt_flow.steps.size()) != horizon - 1)
      throw ShapeError("ground-truth flow must have horizon-1 steps");
    gt_flow.validate(grid);
  }
}

Pose ego_to_world(const Pose& ref, const PlanState& state) {
  const double c = std::cos(ref.heading), s = std::sin(ref.heading);
  Pose out;
  out.x = ref.x + c * state.s - s * state.l;
  out.y = ref.y + s * state.s + c * state.l;
  out.heading = wrap_angle(ref.heading + state.phi);
  out.speed = state.v;
  return out;
}

}  // namespace riskmm
