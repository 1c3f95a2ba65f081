#include "riskmm/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "riskmm/errors.hpp"
#include "riskmm/metrics.hpp"
#include "riskmm/rng.hpp"

namespace riskmm::sim {

namespace {

constexpr double kSpeedNorm = 15.0;  // scales velocity channels into ~[0,1]
constexpr double kInnerMargin = 2.0; // meters every trajectory keeps off the edge

Pose advance(const Pose& p, double dt, double accel, double delta, double l_fr) {
  Pose next;
  next.x = p.x + dt * p.speed * std::cos(p.heading);
  next.y = p.y + dt * p.speed * std::sin(p.heading);
  next.heading = p.heading + dt * p.speed * delta / l_fr;
  next.speed = std::max(0.0, p.speed + dt * accel);
  return next;
}

std::vector<Pose> rollout_archetype(const Pose& start, Archetype a, double dt,
                                    int steps, double l_fr) {
  std::vector<Pose> out;
  out.reserve(steps);
  Pose cur = start;
  for (int k = 0; k < steps; ++k) {
    double accel = 0.0, delta = 0.0;
    if (a == Archetype::kBrake) accel = -2.0;
    if (a == Archetype::kLaneShift) delta = (2 * k < steps) ? 0.03 : -0.03;
    cur = advance(cur, dt, accel, delta, l_fr);
    out.push_back(cur);
  }
  return out;
}

bool inside_with_margin(const Vec2& p, const GridSpec& g, double margin) {
  return p.x >= g.x_min() + margin && p.x <= g.x_max() - margin &&
         p.y >= g.y_min() + margin && p.y <= g.y_max() - margin;
}

Pose clamp_into_grid(Pose p, const GridSpec& g) {
  p.x = std::clamp(p.x, g.x_min() + g.cell_size, g.x_max() - g.cell_size);
  p.y = std::clamp(p.y, g.y_min() + g.cell_size, g.y_max() - g.cell_size);
  return p;
}

Eigen::MatrixXd gaussian_blur(const Eigen::MatrixXd& src, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::VectorXd kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  kernel /= kernel.sum();

  const Eigen::Index rows = src.rows(), cols = src.cols();
  Eigen::MatrixXd horiz = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const Eigen::Index cc = c + i;
        if (cc >= 0 && cc < cols) acc += kernel[i + radius] * src(r, cc);
      }
      horiz(r, c) = acc;
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const Eigen::Index rr = r + i;
        if (rr >= 0 && rr < rows) acc += kernel[i + radius] * horiz(rr, c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

/// Visit the centers of all cells strictly inside the box.
template <typename F>
void for_cells_in_box(const OrientedBox& box, const GridSpec& g, F&& visit) {
  const double r = 0.5 * std::hypot(box.length, box.width);
  const int r0 = std::max(0, static_cast<int>(std::floor((box.center.y - r - g.y_min()) / g.cell_size)));
  const int r1 = std::min(g.height_cells - 1, static_cast<int>(std::floor((box.center.y + r - g.y_min()) / g.cell_size)));
  const int c0 = std::max(0, static_cast<int>(std::floor((box.center.x - r - g.x_min()) / g.cell_size)));
  const int c1 = std::min(g.width_cells - 1, static_cast<int>(std::floor((box.center.x + r - g.x_min()) / g.cell_size)));
  for (int row = r0; row <= r1; ++row)
    for (int col = c0; col <= c1; ++col)
      if (box.contains(cell_to_world({row, col}, g))) visit(row, col);
}

Pose true_pose_at(const VehicleRecord& v, int t) {
  return t == 0 ? v.true_pose : v.gt_future[t - 1];
}

OrientedBox box_at(const VehicleRecord& v, const Pose& p) {
  return {{p.x, p.y}, v.length, v.width, p.heading};
}

Eigen::MatrixXd random_matrix(int rows, int cols, double stddev, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, stddev);
  return m;
}

}  // namespace

OccupancyGrid predicted_occupancy(const Scenario& sc) {
  OccupancyGrid pred;
  pred.dt = sc.dt;
  for (int t = 0; t < sc.horizon; ++t) {
    std::vector<OrientedBox> boxes;
    boxes.reserve(sc.vehicles.size());
    for (const VehicleRecord& v : sc.vehicles) {
      Pose p = v.pose;
      p.x += v.pose.speed * std::cos(v.pose.heading) * sc.dt * t;
      p.y += v.pose.speed * std::sin(v.pose.heading) * sc.dt * t;
      if (!inside_with_margin({p.x, p.y}, sc.grid, 0.0)) continue;
      boxes.push_back(box_at(v, p));
    }
    pred.steps.push_back(gaussian_blur(rasterize_vehicles(boxes, sc.grid), 1.0));
  }
  return pred;
}

void GenerationConfig::validate() const {
  grid.validate();
  if (dt <= 0.0) throw ConfigError("dt must be positive");
  if (horizon < 2) throw ConfigError("horizon must be at least 2");
  if (history_len < 1) throw ConfigError("history length must be at least 1");
  if (min_vehicles < 0 || max_vehicles < min_vehicles)
    throw ConfigError("vehicle count range is invalid");
  if (min_speed < 0.0 || max_speed < min_speed)
    throw ConfigError("speed range is invalid");
  const double mix_sum = mix[0] + mix[1] + mix[2];
  if (mix[0] < 0.0 || mix[1] < 0.0 || mix[2] < 0.0 ||
      std::abs(mix_sum - 1.0) > 1e-9)
    throw ConfigError("archetype mix must be a probability distribution");
}

OracleConfig OracleConfig::defaults(int horizon) {
  OracleConfig cfg;
  cfg.weights.resize(kArchetypeCount);
  Eigen::RowVectorXd cruise(kCostParamsPerStep), brake(kCostParamsPerStep),
      shift(kCostParamsPerStep);
  //        q_s  q_v  q_l  q_phi r00  r01 r10 r11  g_s  g_v  g_l  g_phi h_a h_d
  cruise << 0.0, 0.0, 1.0, 1.0,  1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  brake  << 0.0, 1.5, 1.0, 1.0,  0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  shift  << 0.0, 0.0, 0.5, 1.0,  1.0, 0.0, 0.0, 0.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0;
  cfg.weights[0] = cruise.replicate(horizon, 1);
  cfg.weights[1] = brake.replicate(horizon, 1);
  cfg.weights[2] = shift.replicate(horizon, 1);
  return cfg;
}

void OracleConfig::validate(int horizon) const {
  if (weights.size() != kArchetypeCount)
    throw ConfigError("oracle needs one weight slice per archetype");
  for (const Eigen::MatrixXd& w : weights) {
    if (w.rows() != horizon || w.cols() != kCostParamsPerStep)
      throw ShapeError("oracle weight slices must be horizon x 14");
    if (!w.allFinite()) throw NumericError("oracle weights must be finite");
  }
  if (scenario_count < 1) throw ConfigError("scenario count must be positive");
}

Scenario generate_scenario(const GenerationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Scenario sc;
  sc.seed = seed;
  sc.grid = cfg.grid;
  sc.dt = cfg.dt;
  sc.horizon = cfg.horizon;
  sc.history_len = cfg.history_len;

  const int count = cfg.min_vehicles == cfg.max_vehicles
                        ? cfg.min_vehicles
                        : rng.uniform_int(cfg.min_vehicles, cfg.max_vehicles);
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_placement_attempts; ++attempt) {
      VehicleRecord v;
      v.id = i;
      Pose p;
      p.x = rng.uniform(cfg.grid.x_min() + cfg.border_margin,
                        cfg.grid.x_max() - cfg.border_margin);
      p.y = rng.uniform(cfg.grid.y_min() + cfg.border_margin,
                        cfg.grid.y_max() - cfg.border_margin);
      p.heading = rng.uniform(-M_PI, M_PI);
      p.speed = rng.uniform(cfg.min_speed, cfg.max_speed);
      v.length = rng.uniform(4.2, 5.0);
      v.width = rng.uniform(1.8, 2.1);
      v.l_fr = rng.uniform(2.2, 3.2);
      const double mix_draw = rng.uniform();
      v.archetype = mix_draw < cfg.mix[0] ? 0 : (mix_draw < cfg.mix[0] + cfg.mix[1] ? 1 : 2);

      v.pose = v.true_pose = p;
      v.history.reserve(cfg.history_len);
      for (int h = cfg.history_len - 1; h >= 0; --h) {
        Pose past = p;
        past.x -= p.speed * std::cos(p.heading) * cfg.dt * h;
        past.y -= p.speed * std::sin(p.heading) * cfg.dt * h;
        v.history.push_back(past);
      }
      v.gt_future = rollout_archetype(p, static_cast<Archetype>(v.archetype),
                                      cfg.dt, cfg.horizon - 1, v.l_fr);

      bool ok = true;
      for (const Pose& h : v.history)
        ok = ok && inside_with_margin({h.x, h.y}, cfg.grid, kInnerMargin);
      for (const Pose& f : v.gt_future)
        ok = ok && inside_with_margin({f.x, f.y}, cfg.grid, kInnerMargin);
      for (const VehicleRecord& other : sc.vehicles) {
        if (!ok) break;
        const double d = std::hypot(p.x - other.pose.x, p.y - other.pose.y);
        ok = d >= cfg.min_separation &&
             metrics::oriented_iou(v.box(), other.box()) == 0.0;
      }
      if (!ok) continue;
      v.cell = world_to_cell({p.x, p.y}, cfg.grid);
      sc.vehicles.push_back(std::move(v));
      placed = true;
      break;
    }
    if (!placed)
      throw PlacementError("could not place vehicle " + std::to_string(i) +
                           " after " + std::to_string(cfg.max_placement_attempts) +
                           " attempts");
  }

  sc.features = compute_features(sc);
  compute_ground_truth(sc);
  return sc;
}

FeatureGrid compute_features(const Scenario& sc) {
  const GridSpec& g = sc.grid;
  FeatureGrid f(g.height_cells, g.width_cells, kFeatureChannels);

  std::vector<OrientedBox> boxes;
  boxes.reserve(sc.vehicles.size());
  for (const VehicleRecord& v : sc.vehicles) boxes.push_back(v.box());
  const Eigen::MatrixXd raster = rasterize_vehicles(boxes, g);
  const Eigen::MatrixXd blurs[3] = {gaussian_blur(raster, 1.0),
                                    gaussian_blur(raster, 2.0),
                                    gaussian_blur(raster, 4.0)};
  for (int row = 0; row < g.height_cells; ++row) {
    for (int col = 0; col < g.width_cells; ++col) {
      f.at(row, col, 0) = raster(row, col);
      for (int b = 0; b < 3; ++b) f.at(row, col, 1 + b) = blurs[b](row, col);
      f.at(row, col, 7) = 1.0;
    }
  }
  for (const VehicleRecord& v : sc.vehicles) {
    const double vx = v.pose.speed * std::cos(v.pose.heading) / kSpeedNorm;
    const double vy = v.pose.speed * std::sin(v.pose.heading) / kSpeedNorm;
    const double sp = v.pose.speed / kSpeedNorm;
    for_cells_in_box(v.box(), g, [&](int row, int col) {
      f.at(row, col, 4) = vx;
      f.at(row, col, 5) = vy;
      f.at(row, col, 6) = sp;
    });
  }
  return f;
}

void compute_ground_truth(Scenario& sc) {
  const GridSpec& g = sc.grid;
  sc.gt_occupancy.dt = sc.dt;
  sc.gt_occupancy.steps.clear();
  for (int t = 0; t < sc.horizon; ++t) {
    std::vector<OrientedBox> boxes;
    boxes.reserve(sc.vehicles.size());
    for (const VehicleRecord& v : sc.vehicles) boxes.push_back(box_at(v, true_pose_at(v, t)));
    sc.gt_occupancy.steps.push_back(rasterize_vehicles(boxes, g));
  }

  sc.gt_flow.steps.clear();
  for (int t = 0; t + 1 < sc.horizon; ++t) {
    FlowStep step;
    step.d_row = Eigen::MatrixXd::Zero(g.height_cells, g.width_cells);
    step.d_col = Eigen::MatrixXd::Zero(g.height_cells, g.width_cells);
    for (const VehicleRecord& v : sc.vehicles) {
      const Pose from = true_pose_at(v, t);
      const Pose to = true_pose_at(v, t + 1);
      const CellIndex cf = world_to_cell({from.x, from.y}, g);
      const CellIndex ct = world_to_cell({to.x, to.y}, g);
      const double d_row = ct.row - cf.row;
      const double d_col = ct.col - cf.col;
      for_cells_in_box(box_at(v, to), g, [&](int row, int col) {
        step.d_row(row, col) = d_row;
        step.d_col(row, col) = d_col;
      });
    }
    sc.gt_flow.steps.push_back(std::move(step));
  }
}

Scenario inject_pose_noise(const Scenario& scenario, const NoiseConfig& cfg) {
  if (cfg.sigma_pos < 0.0 || cfg.sigma_heading_deg < 0.0)
    throw ConfigError("noise standard deviations must be nonnegative");
  Scenario out = scenario;
  Rng rng(cfg.seed);
  for (int i = 1; i < out.vehicle_count(); ++i) {
    VehicleRecord& v = out.vehicles[i];
    const double dx = rng.normal(0.0, cfg.sigma_pos);
    const double dy = rng.normal(0.0, cfg.sigma_pos);
    const double dh = rng.normal(0.0, cfg.sigma_heading_deg * M_PI / 180.0);
    v.pose.x += dx;
    v.pose.y += dy;
    v.pose.heading = wrap_angle(v.pose.heading + dh);
    v.pose = clamp_into_grid(v.pose, out.grid);
    for (Pose& h : v.history) {
      h.x += dx;
      h.y += dy;
      h.heading = wrap_angle(h.heading + dh);
    }
    v.cell = world_to_cell({v.pose.x, v.pose.y}, out.grid);
  }
  out.features = compute_features(out);
  return out;
}

Scenario inject_delay(const Scenario& scenario, int delay_ms) {
  if (delay_ms < 0) throw ConfigError("delay must be nonnegative");
  if (delay_ms == 0) return scenario;
  Scenario out = scenario;
  const double frame_ms = out.dt * 1000.0;
  const double span_ms = (out.history_len - 1) * frame_ms;
  if (delay_ms > span_ms)
    throw InsufficientHistory("delay " + std::to_string(delay_ms) +
                              " ms exceeds recorded history span of " +
                              std::to_string(static_cast<int>(span_ms)) + " ms");
  for (int i = 1; i < out.vehicle_count(); ++i) {
    VehicleRecord& v = out.vehicles[i];
    const double idx = (out.history_len - 1) - delay_ms / frame_ms;
    const int i0 = static_cast<int>(std::floor(idx));
    const int i1 = std::min(i0 + 1, out.history_len - 1);
    const double a = idx - i0;
    const Pose& p0 = v.history[i0];
    const Pose& p1 = v.history[i1];
    Pose p;
    p.x = p0.x + a * (p1.x - p0.x);
    p.y = p0.y + a * (p1.y - p0.y);
    p.speed = p0.speed + a * (p1.speed - p0.speed);
    p.heading = wrap_angle(p0.heading + a * wrap_angle(p1.heading - p0.heading));
    v.pose = clamp_into_grid(p, out.grid);
    v.cell = world_to_cell({v.pose.x, v.pose.y}, out.grid);
  }
  out.features = compute_features(out);
  return out;
}

std::vector<Demonstration> generate_demonstrations(const Scenario& scenario,
                                                   int scenario_index,
                                                   const OracleConfig& oracle,
                                                   const PlannerConfig& planner_cfg) {
  oracle.validate(planner_cfg.horizon);
  std::vector<Demonstration> demos;
  demos.reserve(scenario.vehicles.size());
  for (int i = 0; i < scenario.vehicle_count(); ++i) {
    const PlannedTrajectory traj =
        plan(scenario, i, oracle.weights[scenario.vehicles[i].archetype], planner_cfg);
    Demonstration d;
    d.scenario = scenario_index;
    d.vehicle = i;
    d.target.reserve(traj.points.size());
    for (const PlannedPoint& pt : traj.points)
      d.target.push_back({pt.x, pt.y, pt.heading, pt.speed});
    demos.push_back(std::move(d));
  }
  return demos;
}

AttentionParams seeded_attention_params(int num_heads, int model_dim,
                                        std::uint64_t seed) {
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(model_dim));
  AttentionParams p;
  p.num_heads = num_heads;
  p.model_dim = model_dim;
  const int hd = model_dim / num_heads;
  for (int h = 0; h < num_heads; ++h) p.Wq.push_back(random_matrix(hd, model_dim, stddev, rng));
  for (int h = 0; h < num_heads; ++h) p.Wk.push_back(random_matrix(hd, model_dim, stddev, rng));
  for (int h = 0; h < num_heads; ++h) p.Wv.push_back(random_matrix(hd, model_dim, stddev, rng));
  p.W_out = random_matrix(model_dim, model_dim, stddev, rng);
  p.validate();
  return p;
}

DecoderParams seeded_decoder_params(int horizon, int model_dim,
                                    std::uint64_t seed) {
  Rng rng(seed);
  DecoderParams d;
  d.W = random_matrix(horizon * kCostParamsPerStep, model_dim, 0.01, rng);
  Eigen::RowVectorXd neutral(kCostParamsPerStep);
  neutral << 0.5, 0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  d.b.resize(horizon * kCostParamsPerStep);
  for (int t = 0; t < horizon; ++t)
    d.b.segment(t * kCostParamsPerStep, kCostParamsPerStep) = neutral.transpose();
  d.validate();
  return d;
}

RiskComputation scenario_risk(const Scenario& scenario, const AttentionParams& params) {
  std::vector<CellIndex> cells;
  cells.reserve(scenario.vehicles.size());
  for (const VehicleRecord& v : scenario.vehicles) cells.push_back(v.cell);
  const Eigen::MatrixXd pos = position_embedding(scenario.grid, params.model_dim);
  RiskAttentionOutput out =
      risk_cross_attention(scenario.features, cells, params, pos);
  return {std::move(out.risk_features), std::move(out.risk_map)};
}

Eigen::MatrixXd scenario_risk_features(const Scenario& scenario,
                                       const AttentionParams& params) {
  return scenario_risk(scenario, params).risk_features;
}

DemonstrationSet build_demonstration_set(const GenerationConfig& gen,
                                         const OracleConfig& oracle,
                                         const AttentionParams& attn,
                                         const PlannerConfig& planner_cfg) {
  oracle.validate(planner_cfg.horizon);
  DemonstrationSet set;
  set.generating_weights = oracle.weights;
  for (int s = 0; s < oracle.scenario_count; ++s) {
    Scenario sc = generate_scenario(gen, Rng::derive_seed(oracle.seed, s));
    set.risk_features.push_back(scenario_risk_features(sc, attn));
    std::vector<Demonstration> demos =
        generate_demonstrations(sc, s, oracle, planner_cfg);
    set.demos.insert(set.demos.end(), demos.begin(), demos.end());
    set.scenarios.push_back(std::move(sc));
  }
  return set;
}

SuiteRow evaluate_cell(const SuiteConfig& cfg, double noise_level, int delay_ms,
                       std::vector<std::string>* failure_log) {
  SuiteRow row;
  row.sigma_pos = noise_level;
  row.sigma_heading_deg = noise_level;
  row.delay_ms = delay_ms;

  const std::uint64_t cell_tag =
      std::bit_cast<std::uint64_t>(noise_level) ^
      (static_cast<std::uint64_t>(delay_ms) << 1);
  const std::uint64_t cell_seed = Rng::derive_seed(cfg.seed, cell_tag);

  double ade_sum = 0.0, auc_sum = 0.0, iou_sum = 0.0;
  std::vector<metrics::ScenarioPlan> plans;
  for (int s = 0; s < cfg.scenarios_per_cell; ++s) {
    try {
      Scenario sc = generate_scenario(cfg.generation, Rng::derive_seed(cfg.seed, s));
      if (delay_ms > 0) sc = inject_delay(sc, delay_ms);
      if (noise_level > 0.0) {
        NoiseConfig nc;
        nc.sigma_pos = noise_level;
        nc.sigma_heading_deg = noise_level;
        nc.seed = Rng::derive_seed(cell_seed, s);
        sc = inject_pose_noise(sc, nc);
      }

      double scenario_ade = 0.0;
      metrics::ScenarioPlan plan_record;
      for (int v = 0; v < sc.vehicle_count(); ++v) {
        const PlannedTrajectory traj = plan(
            sc, v, cfg.oracle.weights[sc.vehicles[v].archetype], cfg.planner);
        scenario_ade += metrics::ade(traj, sc.vehicles[v].gt_future);
        if (v == 0) plan_record.ego = traj;
        else plan_record.others.push_back(sc.vehicles[v].true_trajectory());
      }
      ade_sum += scenario_ade / sc.vehicle_count();
      auc_sum += metrics::occupancy_auc(predicted_occupancy(sc), sc.gt_occupancy);
      iou_sum += metrics::soft_iou(predicted_occupancy(sc), sc.gt_occupancy).value;
      plans.push_back(std::move(plan_record));
      ++row.scenario_count;
    } catch (const Error& e) {
      ++row.failures;
      if (failure_log)
        failure_log->push_back("noise=" + std::to_string(noise_level) +
                               " delay=" + std::to_string(delay_ms) +
                               " scenario=" + std::to_string(s) + ": " + e.what());
    }
  }
  if (row.scenario_count > 0) {
    row.ade = ade_sum / row.scenario_count;
    row.occupancy_auc = auc_sum / row.scenario_count;
    row.soft_iou = iou_sum / row.scenario_count;
    row.collision_rate = metrics::collision_rate(plans, cfg.collision_threshold);
  }
  return row;
}

SuiteReport run_suite(const SuiteConfig& cfg) {
  if (cfg.scenarios_per_cell < 1)
    throw ConfigError("suite needs at least one scenario per cell");
  cfg.oracle.validate(cfg.planner.horizon);
  SuiteReport report;
  for (double noise : cfg.noise_levels) {
    for (int delay : cfg.delays_ms) {
      SuiteRow row = evaluate_cell(cfg, noise, delay, &report.failure_log);
      report.total_failures += row.failures;
      report.total_runs += cfg.scenarios_per_cell;
      report.rows.push_back(row);
    }
  }
  if (report.total_failures * 10 > report.total_runs)
    throw Error("suite failure rate above 10%: " +
                std::to_string(report.total_failures) + "/" +
                std::to_string(report.total_runs));
  return report;
}

}  // namespace riskmm::sim
