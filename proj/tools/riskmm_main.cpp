#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "riskmm/errors.hpp"
#include "riskmm/harness.hpp"
#include "riskmm/io.hpp"
#include "riskmm/learning.hpp"
#include "riskmm/metrics.hpp"
#include "riskmm/render.hpp"
#include "riskmm/rng.hpp"

namespace fs = std::filesystem;
using namespace riskmm;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RISKMM_SEED")) {
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
  }
  return 1;
}

void echo_config(const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) std::cout << "config " << k << "=" << v << "\n";
}

std::string fd(double v) { return io::format_double(v); }

PlannedTrajectory demo_to_trajectory(const Demonstration& demo) {
  PlannedTrajectory t;
  t.vehicle_id = demo.vehicle;
  t.points.reserve(demo.target.size());
  for (const Pose& p : demo.target) t.points.push_back({p.x, p.y, p.heading, p.speed});
  return t;
}

std::vector<Trajectory> other_true_trajectories(const Scenario& sc, int skip) {
  std::vector<Trajectory> others;
  for (int i = 0; i < sc.vehicle_count(); ++i)
    if (i != skip) others.push_back(sc.vehicles[i].true_trajectory());
  return others;
}

struct GenerateOpts {
  int count = 10;
  std::uint64_t seed = default_seed();
  std::string outdir = "out";
  int vehicles_min = 2;
  int vehicles_max = 5;
  double dt = 0.5;
  int horizon = 7;
  int history = 5;
  int verbosity = 1;
};

void cmd_generate(const GenerateOpts& o) {
  if (o.count < 1) throw ConfigError("--count must be at least 1");
  sim::GenerationConfig gen;
  gen.dt = o.dt;
  gen.horizon = o.horizon;
  gen.history_len = o.history;
  gen.min_vehicles = o.vehicles_min;
  gen.max_vehicles = o.vehicles_max;
  gen.validate();
  const sim::OracleConfig oracle = sim::OracleConfig::defaults(o.horizon);
  PlannerConfig pc;
  pc.dt = o.dt;
  pc.horizon = o.horizon;

  echo_config({{"subcommand", "generate"},
               {"count", std::to_string(o.count)},
               {"seed", std::to_string(o.seed)},
               {"outdir", o.outdir},
               {"vehicles_min", std::to_string(o.vehicles_min)},
               {"vehicles_max", std::to_string(o.vehicles_max)},
               {"dt", fd(o.dt)},
               {"horizon", std::to_string(o.horizon)},
               {"history", std::to_string(o.history)},
               {"verbosity", std::to_string(o.verbosity)}});

  fs::create_directories(o.outdir);
  for (int s = 0; s < o.count; ++s) {
    io::ScenarioDocument doc;
    doc.scenario = sim::generate_scenario(gen, Rng::derive_seed(o.seed, s));
    for (const Demonstration& d :
         sim::generate_demonstrations(doc.scenario, s, oracle, pc))
      doc.planned.push_back(demo_to_trajectory(d));
    char name[32];
    std::snprintf(name, sizeof(name), "scenario_%03d.json", s);
    const fs::path path = fs::path(o.outdir) / name;
    io::save_scenario(doc, path);
    if (o.verbosity >= 1) std::cout << "wrote " << path.string() << "\n";
  }
}

struct PlanOpts {
  std::string scenario;
  std::string out;
  std::string diagnostics;
  std::string params;
  std::string attention;
  std::uint64_t params_seed = 7;
  double v_max = kVMaxDefault;
  bool relinearize = false;
  bool use_oracle = false;
  int verbosity = 1;
};

void cmd_plan(const PlanOpts& o) {
  io::ScenarioDocument doc = io::load_scenario(o.scenario);
  Scenario& sc = doc.scenario;
  PlannerConfig pc;
  pc.dt = sc.dt;
  pc.horizon = sc.horizon;
  pc.v_max = o.v_max;
  pc.relinearize = o.relinearize;

  echo_config({{"subcommand", "plan"},
               {"scenario", o.scenario},
               {"out", o.out},
               {"params", o.params.empty() ? "(seeded)" : o.params},
               {"attention", o.attention.empty() ? "(seeded)" : o.attention},
               {"params_seed", std::to_string(o.params_seed)},
               {"v_max", fd(o.v_max)},
               {"relinearize", o.relinearize ? "true" : "false"},
               {"use_oracle", o.use_oracle ? "true" : "false"},
               {"verbosity", std::to_string(o.verbosity)}});

  std::vector<Eigen::MatrixXd> slices;
  if (o.use_oracle) {
    const sim::OracleConfig oracle = sim::OracleConfig::defaults(sc.horizon);
    for (const VehicleRecord& v : sc.vehicles)
      slices.push_back(oracle.weights[v.archetype]);
  } else {
    const AttentionParams attn =
        o.attention.empty()
            ? sim::seeded_attention_params(4, sim::kFeatureChannels,
                                           Rng::derive_seed(o.params_seed, 17))
            : io::load_attention(o.attention);
    const DecoderParams decoder =
        o.params.empty()
            ? sim::seeded_decoder_params(sc.horizon, sim::kFeatureChannels,
                                         o.params_seed)
            : io::load_decoder(o.params);
    const Eigen::MatrixXd risk = sim::scenario_risk_features(sc, attn);
    const CostMap cost = decode_cost_map(risk, decoder);
    slices = cost.per_vehicle;
  }

  doc.planned.clear();
  std::vector<std::vector<double>> diag;
  for (int v = 0; v < sc.vehicle_count(); ++v) {
    PlanResult res;
    try {
      res = plan_vehicle(sc, v, slices[v], pc);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw Error("planning vehicle " + std::to_string(v) + " failed: " + e.what());
    }
    doc.planned.push_back(res.trajectory);
    diag.push_back({static_cast<double>(v), res.solution.kkt_residual,
                    res.solution.min_pivot,
                    static_cast<double>(res.solution.active_speed_steps.size())});
    if (o.verbosity >= 2) {
      std::cout << "vehicle " << v << " kkt_residual=" << fd(res.solution.kkt_residual)
                << " min_pivot=" << fd(res.solution.min_pivot) << " active=[";
      for (std::size_t i = 0; i < res.solution.active_speed_steps.size(); ++i)
        std::cout << (i ? " " : "") << res.solution.active_speed_steps[i];
      std::cout << "]\n";
    }
  }
  io::save_scenario(doc, o.out);
  if (!o.diagnostics.empty())
    io::write_csv(o.diagnostics, {"vehicle", "kkt_residual", "min_pivot", "active_steps"}, diag);
  if (o.verbosity >= 1) std::cout << "wrote " << o.out << "\n";
}

struct LearnOpts {
  int count = 20;
  std::uint64_t seed = default_seed();
  std::uint64_t params_seed = 7;
  int epochs = 200;
  double lr = 1e-2;
  double collision_weight = 0.0;
  double holdout = 0.3;
  std::string init;
  std::string out = "decoder.json";
  std::string curve = "curve.csv";
  int verbosity = 1;
};

void split_demo_set(const DemonstrationSet& all, int train_scenarios,
                    DemonstrationSet& train, DemonstrationSet& holdout) {
  train.generating_weights = holdout.generating_weights = all.generating_weights;
  for (int s = 0; s < static_cast<int>(all.scenarios.size()); ++s) {
    DemonstrationSet& dst = s < train_scenarios ? train : holdout;
    dst.scenarios.push_back(all.scenarios[s]);
    dst.risk_features.push_back(all.risk_features[s]);
  }
  for (const Demonstration& d : all.demos) {
    Demonstration copy = d;
    if (d.scenario < train_scenarios) {
      train.demos.push_back(copy);
    } else {
      copy.scenario -= train_scenarios;
      holdout.demos.push_back(copy);
    }
  }
}

void cmd_learn(const LearnOpts& o) {
  if (o.count < 1) throw ConfigError("--count must be at least 1");
  if (o.holdout < 0.0 || o.holdout >= 1.0)
    throw ConfigError("--holdout must lie in [0, 1)");
  sim::GenerationConfig gen;
  sim::OracleConfig oracle = sim::OracleConfig::defaults(gen.horizon);
  oracle.scenario_count = o.count;
  oracle.seed = o.seed;
  PlannerConfig pc;
  pc.dt = gen.dt;
  pc.horizon = gen.horizon;

  echo_config({{"subcommand", "learn"},
               {"count", std::to_string(o.count)},
               {"seed", std::to_string(o.seed)},
               {"params_seed", std::to_string(o.params_seed)},
               {"epochs", std::to_string(o.epochs)},
               {"lr", fd(o.lr)},
               {"collision_weight", fd(o.collision_weight)},
               {"holdout", fd(o.holdout)},
               {"init", o.init.empty() ? "(seeded)" : o.init},
               {"out", o.out},
               {"curve", o.curve},
               {"verbosity", std::to_string(o.verbosity)}});

  const AttentionParams attn = sim::seeded_attention_params(
      4, sim::kFeatureChannels, Rng::derive_seed(o.params_seed, 17));
  const DemonstrationSet all = sim::build_demonstration_set(gen, oracle, attn, pc);
  const int train_count =
      std::max(1, o.count - static_cast<int>(std::lround(o.count * o.holdout)));
  DemonstrationSet train, holdout;
  split_demo_set(all, train_count, train, holdout);

  const DecoderParams init =
      o.init.empty()
          ? sim::seeded_decoder_params(gen.horizon, sim::kFeatureChannels, o.params_seed)
          : io::load_decoder(o.init);

  FitConfig fc;
  fc.epochs = o.epochs;
  fc.learning_rate = o.lr;
  fc.collision_weight = o.collision_weight;
  fc.planner = pc;

  double ade_init = 0.0;
  if (!holdout.demos.empty()) ade_init = evaluate_decoder_ade(holdout, init, pc);
  const FitResult res = fit_cost_parameters(train, init, fc);
  io::save_decoder(res.decoder, o.out);
  std::vector<std::vector<double>> rows;
  rows.reserve(res.curve.size());
  for (const EpochRecord& r : res.curve)
    rows.push_back({static_cast<double>(r.epoch), r.loss, r.grad_norm});
  io::write_csv(o.curve, {"epoch", "loss", "grad_norm"}, rows);

  if (!holdout.demos.empty()) {
    const double ade_final = evaluate_decoder_ade(holdout, res.decoder, pc);
    std::cout << "holdout_ade_initial=" << fd(ade_init)
              << " holdout_ade_final=" << fd(ade_final) << "\n";
  }
  if (o.verbosity >= 1)
    std::cout << "wrote " << o.out << " and " << o.curve << "\n";
}

struct EvalOpts {
  std::string scenario;
  std::string reference;
  std::string out;
  double collision_threshold = 4.0;
  std::string formula_mode = "as_printed";
  int verbosity = 1;
};

metrics::SoftIouMode parse_formula_mode(const std::string& s) {
  if (s == "as_printed") return metrics::SoftIouMode::kAsPrinted;
  if (s == "standard") return metrics::SoftIouMode::kStandard;
  throw ConfigError("--formula-mode must be as_printed or standard");
}

void cmd_eval(const EvalOpts& o) {
  const metrics::SoftIouMode mode = parse_formula_mode(o.formula_mode);
  io::ScenarioDocument doc = io::load_scenario(o.scenario);
  const Scenario& sc = doc.scenario;
  if (doc.planned.empty())
    throw ConfigError("scenario has no planned section; run the plan subcommand first");

  echo_config({{"subcommand", "eval"},
               {"scenario", o.scenario},
               {"reference", o.reference.empty() ? "(ground truth)" : o.reference},
               {"out", o.out.empty() ? "(stdout only)" : o.out},
               {"collision_threshold", fd(o.collision_threshold)},
               {"formula_mode", o.formula_mode},
               {"verbosity", std::to_string(o.verbosity)}});

  double ade_sum = 0.0;
  if (!o.reference.empty()) {
    const io::ScenarioDocument ref = io::load_scenario(o.reference);
    if (ref.planned.size() != doc.planned.size())
      throw ShapeError("reference planned section size mismatch");
    for (std::size_t i = 0; i < doc.planned.size(); ++i) {
      const auto& a = doc.planned[i].points;
      const auto& b = ref.planned[i].points;
      if (a.size() != b.size())
        throw ShapeError("reference trajectory length mismatch");
      double d = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k)
        d += std::hypot(a[k].x - b[k].x, a[k].y - b[k].y);
      ade_sum += d / a.size();
    }
  } else {
    for (std::size_t i = 0; i < doc.planned.size(); ++i)
      ade_sum += metrics::ade(doc.planned[i],
                              sc.vehicles[doc.planned[i].vehicle_id].gt_future);
  }
  const double ade = ade_sum / doc.planned.size();

  metrics::ScenarioPlan plan_record;
  plan_record.ego = doc.planned.front();
  plan_record.others = other_true_trajectories(sc, doc.planned.front().vehicle_id);
  const std::vector<metrics::ScenarioPlan> plans = {plan_record};
  const double cr = metrics::collision_rate(plans, o.collision_threshold);

  const OccupancyGrid pred = sim::predicted_occupancy(sc);
  const double auc = metrics::occupancy_auc(pred, sc.gt_occupancy);
  const double siou = metrics::soft_iou(pred, sc.gt_occupancy, mode).value;

  std::cout << "ade=" << fd(ade) << " cr=" << fd(cr) << " auc=" << fd(auc)
            << " soft_iou=" << fd(siou) << "\n";
  if (!o.out.empty()) {
    io::write_metric_table(o.out, {"ade", "cr", "auc", "soft_iou"},
                           {{ade, cr, auc, siou}});
    io::write_metric_summary(fs::path(o.out).replace_extension(".summary.json"),
                             {{"ade", ade}, {"cr", cr}, {"auc", auc}, {"soft_iou", siou}});
  }
}

struct RobustnessOpts {
  std::uint64_t seed = default_seed();
  int scenarios_per_cell = 12;
  std::string out = "robustness.csv";
  std::string config;
  double collision_threshold = 4.0;
  bool seed_given = false;
  bool cells_given = false;
  bool threshold_given = false;
  int verbosity = 1;
};

void cmd_robustness(const RobustnessOpts& o) {
  sim::SuiteConfig cfg;
  if (!o.config.empty()) cfg = io::load_suite_config(o.config);
  if (o.config.empty() || o.seed_given) cfg.seed = o.seed;
  if (o.config.empty() || o.cells_given) cfg.scenarios_per_cell = o.scenarios_per_cell;
  if (o.config.empty() || o.threshold_given) cfg.collision_threshold = o.collision_threshold;
  cfg.oracle = sim::OracleConfig::defaults(cfg.generation.horizon);
  cfg.oracle.seed = cfg.seed;
  cfg.planner.dt = cfg.generation.dt;
  cfg.planner.horizon = cfg.generation.horizon;

  echo_config({{"subcommand", "robustness"},
               {"config", o.config.empty() ? "(defaults)" : o.config},
               {"seed", std::to_string(cfg.seed)},
               {"scenarios_per_cell", std::to_string(cfg.scenarios_per_cell)},
               {"out", o.out},
               {"collision_threshold", fd(cfg.collision_threshold)},
               {"verbosity", std::to_string(o.verbosity)}});

  const sim::SuiteReport report = sim::run_suite(cfg);
  std::vector<std::vector<double>> rows;
  rows.reserve(report.rows.size());
  for (const sim::SuiteRow& r : report.rows) {
    rows.push_back({r.sigma_pos, r.sigma_heading_deg,
                    static_cast<double>(r.delay_ms), r.ade, r.collision_rate,
                    r.occupancy_auc, r.soft_iou,
                    static_cast<double>(r.scenario_count),
                    static_cast<double>(r.failures)});
    if (o.verbosity >= 1)
      std::cout << "row sigma=" << fd(r.sigma_pos) << " delay_ms=" << r.delay_ms
                << " ade=" << fd(r.ade) << " cr=" << fd(r.collision_rate)
                << " auc=" << fd(r.occupancy_auc) << " soft_iou=" << fd(r.soft_iou)
                << " failures=" << r.failures << "\n";
  }
  io::write_metric_table(o.out,
                         {"sigma_pos", "sigma_heading_deg", "delay_ms", "ade",
                          "cr", "auc", "soft_iou", "scenarios", "failures"},
                         rows);
  io::write_metric_summary(
      fs::path(o.out).replace_extension(".summary.json"),
      {{"rows", static_cast<double>(report.rows.size())},
       {"total_failures", static_cast<double>(report.total_failures)},
       {"total_runs", static_cast<double>(report.total_runs)}});
  if (o.verbosity >= 2)
    for (const std::string& line : report.failure_log)
      std::cout << "failure " << line << "\n";
  std::cout << "failures=" << report.total_failures << "/" << report.total_runs << "\n";
  if (o.verbosity >= 1) std::cout << "wrote " << o.out << "\n";
}

struct RenderOpts {
  std::string scenario;
  std::string outdir = "render";
  std::string attention;
  std::uint64_t params_seed = 7;
  int cell_px = 4;
  int verbosity = 1;
};

void cmd_render(const RenderOpts& o) {
  io::ScenarioDocument doc = io::load_scenario(o.scenario);
  const Scenario& sc = doc.scenario;
  if (sc.vehicles.empty())
    throw ConfigError("scenario has no vehicles, so there is no risk map to render");

  echo_config({{"subcommand", "render"},
               {"scenario", o.scenario},
               {"outdir", o.outdir},
               {"attention", o.attention.empty() ? "(seeded)" : o.attention},
               {"params_seed", std::to_string(o.params_seed)},
               {"cell_px", std::to_string(o.cell_px)},
               {"verbosity", std::to_string(o.verbosity)}});

  const AttentionParams attn =
      o.attention.empty()
          ? sim::seeded_attention_params(4, sim::kFeatureChannels,
                                         Rng::derive_seed(o.params_seed, 17))
          : io::load_attention(o.attention);
  const sim::RiskComputation rc = sim::scenario_risk(sc, attn);

  fs::create_directories(o.outdir);
  render::HeatMapStyle style;
  style.cell_px = o.cell_px;
  std::vector<std::string> written;
  for (int i = 0; i < rc.risk_map.weights.rows(); ++i) {
    Eigen::MatrixXd cells(sc.grid.height_cells, sc.grid.width_cells);
    for (int r = 0; r < sc.grid.height_cells; ++r)
      for (int c = 0; c < sc.grid.width_cells; ++c)
        cells(r, c) = rc.risk_map.weights(i, r * sc.grid.width_cells + c);
    char name[48];
    std::snprintf(name, sizeof(name), "risk_vehicle_%02d.ppm", i);
    const fs::path ppm = fs::path(o.outdir) / name;
    render::write_heat_map_ppm(cells, ppm, style);
    render::write_heat_map_legend(cells, fs::path(ppm).replace_extension(".legend.json"), style);
    written.push_back(ppm.string());
  }
  const fs::path occ = fs::path(o.outdir) / "occupancy_t0.ppm";
  render::write_heat_map_ppm(sc.gt_occupancy.steps.front(), occ, style);
  render::write_heat_map_legend(sc.gt_occupancy.steps.front(),
                                fs::path(occ).replace_extension(".legend.json"), style);
  written.push_back(occ.string());
  const fs::path svg = fs::path(o.outdir) / "scenario.svg";
  render::write_scenario_svg(sc, doc.planned, svg);
  written.push_back(svg.string());
  if (o.verbosity >= 1)
    for (const std::string& w : written) std::cout << "wrote " << w << "\n";
}

void add_verbosity(CLI::App* cmd, int& verbosity) {
  cmd->add_option("-v,--verbosity", verbosity, "Output detail, 0 (quiet) to 3")
      ->check(CLI::Range(0, 3));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bird's-eye-view risk maps feeding a KKT-solved MPC planner"};
  app.require_subcommand(1);

  GenerateOpts gen_o;
  CLI::App* gen = app.add_subcommand("generate", "Synthesize scenario files with oracle demonstrations");
  gen->add_option("--count", gen_o.count, "Number of scenarios");
  gen->add_option("--seed", gen_o.seed, "Base seed (RISKMM_SEED fallback)");
  gen->add_option("--out", gen_o.outdir, "Output directory");
  gen->add_option("--vehicles-min", gen_o.vehicles_min, "Minimum vehicles per scenario");
  gen->add_option("--vehicles-max", gen_o.vehicles_max, "Maximum vehicles per scenario");
  gen->add_option("--dt", gen_o.dt, "Step length in seconds");
  gen->add_option("--horizon", gen_o.horizon, "Planning horizon in steps");
  gen->add_option("--history", gen_o.history, "History frames per vehicle");
  add_verbosity(gen, gen_o.verbosity);

  PlanOpts plan_o;
  CLI::App* plan = app.add_subcommand("plan", "Plan trajectories for every vehicle of a scenario");
  plan->add_option("--scenario", plan_o.scenario, "Scenario file")->required();
  plan->add_option("--out", plan_o.out, "Output scenario file with planned section")->required();
  plan->add_option("--diagnostics", plan_o.diagnostics, "Per-vehicle solver diagnostics CSV");
  plan->add_option("--params", plan_o.params, "Cost decoder parameter file");
  plan->add_option("--attention", plan_o.attention, "Attention parameter file");
  plan->add_option("--params-seed", plan_o.params_seed, "Seed for generated parameters");
  plan->add_option("--v-max", plan_o.v_max, "Speed bound in m/s");
  plan->add_flag("--relinearize", plan_o.relinearize, "Re-linearize dynamics once around the first solution");
  plan->add_flag("--use-oracle", plan_o.use_oracle, "Plan with the archetype oracle weights instead of the decoder");
  add_verbosity(plan, plan_o.verbosity);

  LearnOpts learn_o;
  CLI::App* learn = app.add_subcommand("learn", "Fit the cost decoder to oracle demonstrations");
  learn->add_option("--count", learn_o.count, "Number of scenarios to generate");
  learn->add_option("--seed", learn_o.seed, "Base seed (RISKMM_SEED fallback)");
  learn->add_option("--params-seed", learn_o.params_seed, "Seed for parameter initialization");
  learn->add_option("--epochs", learn_o.epochs, "Gradient descent epochs");
  learn->add_option("--lr", learn_o.lr, "Learning rate");
  learn->add_option("--collision-weight", learn_o.collision_weight, "Collision penalty weight (> 0 adds the risk-averse term)");
  learn->add_option("--holdout", learn_o.holdout, "Held-out scenario fraction");
  learn->add_option("--init", learn_o.init, "Initial decoder parameter file");
  learn->add_option("--out", learn_o.out, "Learned decoder output file");
  learn->add_option("--curve", learn_o.curve, "Loss curve CSV");
  add_verbosity(learn, learn_o.verbosity);

  EvalOpts eval_o;
  CLI::App* eval = app.add_subcommand("eval", "Score a planned scenario file");
  eval->add_option("--scenario", eval_o.scenario, "Scenario file with planned section")->required();
  eval->add_option("--reference", eval_o.reference, "Reference planned file for ADE (default: ground truth)");
  eval->add_option("--out", eval_o.out, "Metric table CSV");
  eval->add_option("--collision-threshold", eval_o.collision_threshold, "Collision distance in meters");
  eval->add_option("--formula-mode", eval_o.formula_mode, "Soft-IoU denominator: as_printed or standard");
  add_verbosity(eval, eval_o.verbosity);

  RobustnessOpts rob_o;
  CLI::App* rob = app.add_subcommand("robustness", "Noise and delay sweep over the fixed-seed suite");
  CLI::Option* rob_seed = rob->add_option("--seed", rob_o.seed, "Base seed (RISKMM_SEED fallback)");
  CLI::Option* rob_cells = rob->add_option("--scenarios-per-cell", rob_o.scenarios_per_cell, "Scenarios per sweep cell");
  rob->add_option("--out", rob_o.out, "Metric table CSV");
  rob->add_option("--config", rob_o.config, "Suite configuration file (JSON, format_version 1)");
  CLI::Option* rob_thresh = rob->add_option("--collision-threshold", rob_o.collision_threshold, "Collision distance in meters");
  add_verbosity(rob, rob_o.verbosity);

  RenderOpts render_o;
  CLI::App* render = app.add_subcommand("render", "Render risk maps, occupancy, and trajectories");
  render->add_option("--scenario", render_o.scenario, "Scenario file")->required();
  render->add_option("--out", render_o.outdir, "Output directory");
  render->add_option("--attention", render_o.attention, "Attention parameter file");
  render->add_option("--params-seed", render_o.params_seed, "Seed for generated parameters");
  render->add_option("--cell-px", render_o.cell_px, "Pixels per grid cell");
  add_verbosity(render, render_o.verbosity);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  rob_o.seed_given = rob_seed->count() > 0;
  rob_o.cells_given = rob_cells->count() > 0;
  rob_o.threshold_given = rob_thresh->count() > 0;

  try {
    if (gen->parsed()) cmd_generate(gen_o);
    if (plan->parsed()) cmd_plan(plan_o);
    if (learn->parsed()) cmd_learn(learn_o);
    if (eval->parsed()) cmd_eval(eval_o);
    if (rob->parsed()) cmd_robustness(rob_o);
    if (render->parsed()) cmd_render(render_o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
