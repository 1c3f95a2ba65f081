#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riskmm/attention.hpp"
#include "riskmm/learning.hpp"
#include "riskmm/losses.hpp"
#include "riskmm/planner.hpp"
#include "riskmm/scenario.hpp"

namespace riskmm::sim {

enum class Archetype { kCruise = 0, kBrake = 1, kLaneShift = 2 };

inline constexpr int kArchetypeCount = 3;
inline constexpr int kFeatureChannels = 8;

struct GenerationConfig {
  GridSpec grid = GridSpec::defaults();
  double dt = 0.5;
  int horizon = 7;
  int history_len = 5;
  int min_vehicles = 2;
  int max_vehicles = 5;
  double min_speed = 5.0;
  double max_speed = 12.0;
  double min_separation = 8.0;  // center distance floor at placement
  double border_margin = 6.0;   // keep-out band along the grid edge
  int max_placement_attempts = 200;
  // Archetype mix (cruise, brake, lane-shift); must sum to 1.
  double mix[kArchetypeCount] = {0.5, 0.25, 0.25};

  void validate() const;
};

/// Known cost weights backing oracle demonstrations, one raw T x 14 slice per
/// archetype.
struct OracleConfig {
  std::vector<Eigen::MatrixXd> weights;  // indexed by Archetype
  int scenario_count = 50;
  std::uint64_t seed = 0;

  static OracleConfig defaults(int horizon);
  void validate(int horizon) const;
};

/// Deterministic scenario synthesis: sampled vehicle layout, archetype
/// kinematics for ground-truth futures, hand-crafted feature channels.
/// Throws PlacementError when vehicles cannot be placed without overlap.
Scenario generate_scenario(const GenerationConfig& cfg, std::uint64_t seed);

/// Feature channels from the reported poses: raster, three blur radii,
/// normalized velocity x/y, normalized speed, constant bias.
FeatureGrid compute_features(const Scenario& scenario);

/// Binary occupancy of the true poses over the horizon plus per-step cell
/// displacements stamped where vehicles land.
void compute_ground_truth(Scenario& scenario);

struct NoiseConfig {
  double sigma_pos = 0.0;          // meters
  double sigma_heading_deg = 0.0;  // degrees
  int delay_ms = 0;
  std::uint64_t seed = 0;
};

/// Rigidly shifts every non-ego vehicle's reported pose and history by a
/// Gaussian draw; ground truth and ego untouched; features rebuilt. Positions
/// are clamped to stay one cell inside the grid.
Scenario inject_pose_noise(const Scenario& scenario, const NoiseConfig& cfg);

/// Replaces every non-ego reported pose with the linearly interpolated pose
/// delay_ms earlier in its history; features rebuilt.
/// Throws InsufficientHistory when the delay exceeds the recorded span.
Scenario inject_delay(const Scenario& scenario, int delay_ms);

/// Oracle demonstrations: the planner run with each vehicle's archetype
/// weights; targets are the planned trajectories.
std::vector<Demonstration> generate_demonstrations(const Scenario& scenario,
                                                   int scenario_index,
                                                   const OracleConfig& oracle,
                                                   const PlannerConfig& planner_cfg);

/// Gaussian-initialized attention/decoder parameter fixtures.
AttentionParams seeded_attention_params(int num_heads, int model_dim,
                                        std::uint64_t seed);
DecoderParams seeded_decoder_params(int horizon, int model_dim,
                                    std::uint64_t seed);

/// Risk features for every vehicle of the scenario (attention read-outs).
Eigen::MatrixXd scenario_risk_features(const Scenario& scenario,
                                       const AttentionParams& params);

/// Constant-velocity occupancy forecast from the reported poses, blurred
/// into soft scores; the baseline predictor scored by the metric suites.
OccupancyGrid predicted_occupancy(const Scenario& scenario);
struct RiskComputation {
  Eigen::MatrixXd risk_features;
  RiskMap risk_map;
};
RiskComputation scenario_risk(const Scenario& scenario,
                              const AttentionParams& params);

/// Scenario batch + risk features + oracle demos, ready for fitting.
DemonstrationSet build_demonstration_set(const GenerationConfig& gen,
                                         const OracleConfig& oracle,
                                         const AttentionParams& attn,
                                         const PlannerConfig& planner_cfg);

struct SuiteConfig {
  GenerationConfig generation;
  OracleConfig oracle;
  PlannerConfig planner;
  int scenarios_per_cell = 12;
  std::vector<double> noise_levels = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<int> delays_ms = {0, 100, 200, 300, 400, 500};
  double collision_threshold = 4.0;
  std::uint64_t seed = 0;
};

struct SuiteRow {
  double sigma_pos = 0.0;          // meters; sigma_heading_deg carries the
  double sigma_heading_deg = 0.0;  // same level in degrees
  int delay_ms = 0;
  double ade = 0.0;
  double collision_rate = 0.0;
  double occupancy_auc = 0.0;
  double soft_iou = 0.0;
  int scenario_count = 0;
  int failures = 0;
};

struct SuiteReport {
  std::vector<SuiteRow> rows;
  int total_failures = 0;
  int total_runs = 0;
  std::vector<std::string> failure_log;
};

/// One row per (noise level, delay) cell: generate, corrupt, plan with the
/// oracle weights, evaluate ADE/CR/AUC/Soft-IoU. The same scenario set is
/// reused across cells; corruption seeds derive from (seed, cell, scenario).
/// Throws when more than 10% of scenario runs fail.
SuiteReport run_suite(const SuiteConfig& cfg);

/// Metrics of a single uncorrupted scenario set (the zero-noise cell).
SuiteRow evaluate_cell(const SuiteConfig& cfg, double noise_level, int delay_ms,
                       std::vector<std::string>* failure_log);

}  // namespace riskmm::sim
