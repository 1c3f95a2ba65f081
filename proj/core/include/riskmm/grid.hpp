#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "riskmm/geometry.hpp"

namespace riskmm {

struct CellIndex {
  int row = 0;
  int col = 0;

  bool operator==(const CellIndex&) const = default;
};

/// Axis-aligned bird's-eye-view grid. Rows index y (height), columns index x
/// (width). Cell (0,0) starts at `origin` (the min-x / min-y corner).
struct GridSpec {
  int height_cells = 0;
  int width_cells = 0;
  double cell_size = 0.0;
  Vec2 origin;

  static GridSpec from_ranges(double x_min, double x_max, double y_min,
                              double y_max, double cell_size);

  /// 100 x 176 cells of 0.8 m covering x in [-70.4, 70.4], y in [-40, 40].
  static GridSpec defaults();

  double x_min() const { return origin.x; }
  double x_max() const { return origin.x + width_cells * cell_size; }
  double y_min() const { return origin.y; }
  double y_max() const { return origin.y + height_cells * cell_size; }
  int cell_count() const { return height_cells * width_cells; }

  int flat_index(CellIndex c) const { return c.row * width_cells + c.col; }
  CellIndex unflatten(int k) const { return {k / width_cells, k % width_cells}; }

  void validate() const;  // throws ConfigError
};

/// Cell containing `pos`. Cells are half-open on their high edges; a point
/// exactly on the grid's outer max boundary maps to the last cell.
/// Throws OutOfGrid naming the offending axis.
CellIndex world_to_cell(const Vec2& pos, const GridSpec& spec);

/// Center of cell `c`. Throws OutOfGrid for indices outside the grid.
Vec2 cell_to_world(CellIndex c, const GridSpec& spec);

/// Binary H x W matrix with 1 at every cell whose center lies strictly inside
/// any of the boxes. Throws OutOfGrid if a box center is outside the grid.
Eigen::MatrixXd rasterize_vehicles(std::span<const OrientedBox> boxes,
                                   const GridSpec& spec);

/// Per-step binary occupancy over a planning horizon; steps[0] is "now".
struct OccupancyGrid {
  double dt = 0.0;
  std::vector<Eigen::MatrixXd> steps;

  int horizon() const { return static_cast<int>(steps.size()); }
  void validate(const GridSpec& spec) const;  // ShapeError / NumericError
};

/// Dense displacement field between consecutive occupancy steps, in cell
/// units: steps[t] maps occupancy at t to occupancy at t+1.
struct FlowStep {
  Eigen::MatrixXd d_row;
  Eigen::MatrixXd d_col;
};

struct FlowField {
  std::vector<FlowStep> steps;

  void validate(const GridSpec& spec) const;
};

/// C feature channels per cell, stored flattened: row k of `values` holds the
/// channels of cell (k / W, k % W).
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int height, int width, int channels);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  double& at(int row, int col, int channel);
  double at(int row, int col, int channel) const;

  Eigen::MatrixXd& values() { return values_; }
  const Eigen::MatrixXd& values() const { return values_; }

  void validate() const;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  Eigen::MatrixXd values_;  // (H*W) x C
};

/// (H*W) x C view of the grid in row-major cell order. The inverse of the
/// mapping is unflatten() on the paired GridSpec.
Eigen::MatrixXd flatten_features(const FeatureGrid& grid);

/// One row of attention mass per vehicle over the flattened grid; rows are
/// nonnegative and sum to one.
struct RiskMap {
  int height = 0;
  int width = 0;
  Eigen::MatrixXd weights;  // N x (H*W)

  void validate() const;  // ShapeError / NumericError
};

inline constexpr int kCostParamsPerStep = 14;

/// Planner cost parameters, one T x 14 matrix per vehicle. Row layout:
/// [0..3] state-weight diagonal, [4..7] control weight (row-major 2x2),
/// [8..11] state-linear term, [12..13] control-linear term.
struct CostMap {
  std::vector<Eigen::MatrixXd> per_vehicle;

  void validate() const;
};

}  // namespace riskmm
