#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <span>

#include "riskmm/planner.hpp"
#include "riskmm/scenario.hpp"

namespace riskmm::render {

struct HeatMapStyle {
  int cell_px = 4;  // square pixel block per grid cell
};

/// Five-stop warm gradient sampled at t in [0, 1].
std::array<unsigned char, 3> heat_color(double t);

/// Binary portable pixel map (P6). Values are min-max normalized per map;
/// grid row 0 is drawn at the bottom so +y points up in the image.
void write_heat_map_ppm(const Eigen::MatrixXd& values,
                        const std::filesystem::path& path,
                        const HeatMapStyle& style = {});

/// Companion metadata for a heat map: value range, color stops, pixel scale.
void write_heat_map_legend(const Eigen::MatrixXd& values,
                           const std::filesystem::path& path,
                           const HeatMapStyle& style = {});

/// Vector-graphics overlay: grid frame, vehicle boxes, ground-truth futures,
/// and planned trajectories in world coordinates.
void write_scenario_svg(const Scenario& scenario,
                        std::span<const PlannedTrajectory> planned,
                        const std::filesystem::path& path);

}  // namespace riskmm::render
