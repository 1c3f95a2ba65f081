#pragma once

#include <cstdint>
#include <vector>

#include "riskmm/dynamics.hpp"
#include "riskmm/geometry.hpp"
#include "riskmm/grid.hpp"

namespace riskmm {

/// World-frame vehicle pose sample.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

struct VehicleRecord {
  int id = -1;
  Pose pose;       // reported pose, subject to communication corruption
  Pose true_pose;  // uncorrupted pose backing the ground truth
  double length = 0.0;
  double width = 0.0;
  double l_fr = 0.0;  // front-to-rear axle distance
  int archetype = 0;  // behavior class assigned at generation
  std::vector<Pose> history;    // oldest first; back() is the reported pose
  std::vector<Pose> gt_future;  // T-1 future poses from true motion
  CellIndex cell;               // grid cell containing the reported position

  OrientedBox box() const { return {{pose.x, pose.y}, length, width, pose.heading}; }
  OrientedBox true_box() const {
    return {{true_pose.x, true_pose.y}, length, width, true_pose.heading};
  }
  /// true_pose followed by the ground-truth future (length horizon).
  std::vector<Pose> true_trajectory() const;
};

/// Scenario container shared across the pipeline. vehicles[0] is the ego.
struct Scenario {
  std::uint64_t seed = 0;
  GridSpec grid;
  double dt = 0.5;
  int horizon = 7;      // prediction/planning steps including "now"
  int history_len = 5;  // history poses including "now"
  std::vector<VehicleRecord> vehicles;
  FeatureGrid features;
  OccupancyGrid gt_occupancy;
  FlowField gt_flow;

  int vehicle_count() const { return static_cast<int>(vehicles.size()); }
  void validate() const;
};

/// Map an ego-frame planner state onto the world frame anchored at `ref`.
Pose ego_to_world(const Pose& ref, const PlanState& state);

}  // namespace riskmm
