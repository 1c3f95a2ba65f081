#include "riskmm/grid.hpp"

#include <cmath>
#include <string>

#include "riskmm/errors.hpp"

namespace riskmm {

namespace {

void check_axis(char axis, double value, double lo, double hi) {
  if (!(value >= lo && value <= hi)) throw OutOfGrid(axis, value, lo, hi);
}

int cell_along(double value, double lo, double cell, int count) {
  int idx = static_cast<int>(std::floor((value - lo) / cell));
  // Points exactly on the outer max edge belong to the last cell.
  if (idx == count) idx = count - 1;
  return idx;
}

}  // namespace

GridSpec GridSpec::from_ranges(double x_min, double x_max, double y_min,
                               double y_max, double cell_size) {
  if (cell_size <= 0.0) throw ConfigError("cell_size must be positive");
  const double nx = (x_max - x_min) / cell_size;
  const double ny = (y_max - y_min) / cell_size;
  GridSpec spec;
  spec.width_cells = static_cast<int>(std::lround(nx));
  spec.height_cells = static_cast<int>(std::lround(ny));
  spec.cell_size = cell_size;
  spec.origin = {x_min, y_min};
  if (spec.width_cells <= 0 || spec.height_cells <= 0 ||
      std::abs(nx - spec.width_cells) > 1e-9 ||
      std::abs(ny - spec.height_cells) > 1e-9) {
    throw ConfigError("grid ranges must be positive integer multiples of cell_size");
  }
  return spec;
}

GridSpec GridSpec::defaults() {
  return from_ranges(-70.4, 70.4, -40.0, 40.0, 0.8);
}

void GridSpec::validate() const {
  if (height_cells <= 0 || width_cells <= 0)
    throw ConfigError("grid must have positive cell counts");
  if (cell_size <= 0.0) throw ConfigError("cell_size must be positive");
}

CellIndex world_to_cell(const Vec2& pos, const GridSpec& spec) {
  check_axis('x', pos.x, spec.x_min(), spec.x_max());
  check_axis('y', pos.y, spec.y_min(), spec.y_max());
  return {cell_along(pos.y, spec.y_min(), spec.cell_size, spec.height_cells),
          cell_along(pos.x, spec.x_min(), spec.cell_size, spec.width_cells)};
}

Vec2 cell_to_world(CellIndex c, const GridSpec& spec) {
  if (c.row < 0 || c.row >= spec.height_cells)
    throw OutOfGrid('y', c.row, 0, spec.height_cells - 1);
  if (c.col < 0 || c.col >= spec.width_cells)
    throw OutOfGrid('x', c.col, 0, spec.width_cells - 1);
  return {spec.x_min() + (c.col + 0.5) * spec.cell_size,
          spec.y_min() + (c.row + 0.5) * spec.cell_size};
}

Eigen::MatrixXd rasterize_vehicles(std::span<const OrientedBox> boxes,
                                   const GridSpec& spec) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(spec.height_cells, spec.width_cells);
  for (const OrientedBox& box : boxes) {
    check_axis('x', box.center.x, spec.x_min(), spec.x_max());
    check_axis('y', box.center.y, spec.y_min(), spec.y_max());
    // Only cells under the box's bounding circle can be inside it.
    const double r = 0.5 * std::hypot(box.length, box.width);
    const int r0 = std::max(
        0, static_cast<int>(std::floor((box.center.y - r - spec.y_min()) / spec.cell_size)));
    const int r1 = std::min(
        spec.height_cells - 1,
        static_cast<int>(std::floor((box.center.y + r - spec.y_min()) / spec.cell_size)));
    const int c0 = std::max(
        0, static_cast<int>(std::floor((box.center.x - r - spec.x_min()) / spec.cell_size)));
    const int c1 = std::min(
        spec.width_cells - 1,
        static_cast<int>(std::floor((box.center.x + r - spec.x_min()) / spec.cell_size)));
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        if (box.contains(cell_to_world({row, col}, spec))) out(row, col) = 1.0;
      }
    }
  }
  return out;
}

void OccupancyGrid::validate(const GridSpec& spec) const {
  if (steps.empty()) throw ShapeError("occupancy grid needs at least one step");
  for (const Eigen::MatrixXd& m : steps) {
    if (m.rows() != spec.height_cells || m.cols() != spec.width_cells)
      throw ShapeError("occupancy step shape does not match grid spec");
    if (!m.allFinite() || m.minCoeff() < 0.0 || m.maxCoeff() > 1.0)
      throw NumericError("occupancy values must lie in [0, 1]");
  }
  if (dt <= 0.0) throw ConfigError("occupancy dt must be positive");
}

void FlowField::validate(const GridSpec& spec) const {
  for (const FlowStep& s : steps) {
    if (s.d_row.rows() != spec.height_cells || s.d_row.cols() != spec.width_cells ||
        s.d_col.rows() != spec.height_cells || s.d_col.cols() != spec.width_cells)
      throw ShapeError("flow step shape does not match grid spec");
    if (!s.d_row.allFinite() || !s.d_col.allFinite())
      throw NumericError("flow values must be finite");
  }
}

FeatureGrid::FeatureGrid(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels),
      values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(height) * width, channels)) {
  if (height <= 0 || width <= 0 || channels <= 0)
    throw ShapeError("feature grid dimensions must be positive");
}

namespace {

void check_feature_access(int row, int col, int channel, int height, int width,
                          int channels) {
  if (row < 0 || row >= height || col < 0 || col >= width || channel < 0 ||
      channel >= channels)
    throw ShapeError("feature access (" + std::to_string(row) + ", " +
                     std::to_string(col) + ", " + std::to_string(channel) +
                     ") outside " + std::to_string(height) + "x" +
                     std::to_string(width) + "x" + std::to_string(channels));
}

}  // namespace

double& FeatureGrid::at(int row, int col, int channel) {
  check_feature_access(row, col, channel, height_, width_, channels_);
  return values_(static_cast<Eigen::Index>(row) * width_ + col, channel);
}

double FeatureGrid::at(int row, int col, int channel) const {
  check_feature_access(row, col, channel, height_, width_, channels_);
  return values_(static_cast<Eigen::Index>(row) * width_ + col, channel);
}

void FeatureGrid::validate() const {
  if (values_.rows() != static_cast<Eigen::Index>(height_) * width_ ||
      values_.cols() != channels_)
    throw ShapeError("feature grid storage does not match its dimensions");
  if (!values_.allFinite()) throw NumericError("feature values must be finite");
}

Eigen::MatrixXd flatten_features(const FeatureGrid& grid) {
  grid.validate();
  return grid.values();
}

void RiskMap::validate() const {
  if (weights.cols() != static_cast<Eigen::Index>(height) * width)
    throw ShapeError("risk map column count must equal height * width");
  if (!weights.allFinite() || weights.minCoeff() < 0.0)
    throw NumericError("risk weights must be finite and nonnegative");
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    if (std::abs(weights.row(i).sum() - 1.0) > 1e-6)
      throw NumericError("risk map row " + std::to_string(i) + " does not sum to 1");
  }
}

void CostMap::validate() const {
  for (const Eigen::MatrixXd& m : per_vehicle) {
    if (m.cols() != kCostParamsPerStep)
      throw ShapeError("cost map rows must have 14 parameters");
    if (m.rows() < 1) throw ShapeError("cost map needs at least one step");
    if (!m.allFinite()) throw NumericError("cost parameters must be finite");
  }
}

}  // namespace riskmm
