#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "riskmm/attention.hpp"
#include "riskmm/harness.hpp"
#include "riskmm/planner.hpp"
#include "riskmm/scenario.hpp"

namespace riskmm::io {

/// Renders a double with the shortest representation that round-trips,
/// so serialized files are byte-stable across runs.
std::string format_double(double value);

struct ScenarioDocument {
  Scenario scenario;
  std::vector<PlannedTrajectory> planned;
};

/// Writes the scenario (and any planned trajectories) as a versioned JSON
/// document. Features and ground-truth grids are not stored; load_scenario
/// recomputes them from the vehicle records.
void save_scenario(const ScenarioDocument& doc, const std::filesystem::path& path);
ScenarioDocument load_scenario(const std::filesystem::path& path);

enum class GridKind : std::uint32_t {
  kOccupancy = 1,
  kFlowRow = 2,
  kFlowCol = 3,
  kRisk = 4,
  kFeature = 5,
  kCost = 6,
};

struct GridStack {
  GridKind kind = GridKind::kOccupancy;
  std::vector<Eigen::MatrixXd> steps;
};

/// Binary grid dump: header {magic "RMM1", H, W, T, element-kind} as
/// little-endian u32 fields, then T*H*W little-endian f32 values row-major.
void write_grid_stack(const GridStack& stack, const std::filesystem::path& path);
GridStack read_grid_stack(const std::filesystem::path& path);

/// Named-tensor binary: header {magic "RMMT", version, tensor count}, then per
/// tensor {name length, name bytes, rank, dims} and a little-endian f32
/// payload in row-major order. All header fields are little-endian u32.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;  // row-major, size = product of dims
};

void write_tensors(const std::vector<NamedTensor>& tensors,
                   const std::filesystem::path& path);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

void save_decoder(const DecoderParams& params, const std::filesystem::path& path);
DecoderParams load_decoder(const std::filesystem::path& path);

void save_attention(const AttentionParams& params, const std::filesystem::path& path);
AttentionParams load_attention(const std::filesystem::path& path);

/// Delimiter-separated table with a header row; cells formatted via
/// format_double.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// write_csv preceded by a `# metrics-table v1` version line.
void write_metric_table(const std::filesystem::path& path,
                        const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows);

/// Versioned JSON summary: {"format_version": 1, "kind": "metric-summary",
/// "metrics": {...}}.
void write_metric_summary(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, double>>& metrics);

/// Versioned JSON suite configuration; fields absent from the file keep the
/// compiled-in defaults.
sim::SuiteConfig load_suite_config(const std::filesystem::path& path);

}  // namespace riskmm::io
