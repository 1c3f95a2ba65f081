#include "riskmm/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "riskmm/errors.hpp"
#include "riskmm/harness.hpp"

namespace riskmm::io {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'R', 'M', 'M', '1'};
constexpr char kTensorMagic[4] = {'R', 'M', 'M', 'T'};
constexpr int kFormatVersion = 1;

json pose_to_json(const Pose& p) {
  return json::array({p.x, p.y, p.heading, p.speed});
}

Pose pose_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw FormatError("pose must be an array of 4 numbers");
  Pose p;
  p.x = j[0].get<double>();
  p.y = j[1].get<double>();
  p.heading = j[2].get<double>();
  p.speed = j[3].get<double>();
  return p;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void require_version(const json& j, const std::string& path) {
  if (!j.contains("format_version") || j["format_version"] != kFormatVersion)
    throw FormatError("unsupported format_version in " + path);
}

void dump_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& what) {
  char buf[4];
  if (!in.read(buf, 4)) throw FormatError("truncated grid file reading " + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void save_scenario(const ScenarioDocument& doc, const std::filesystem::path& path) {
  const Scenario& sc = doc.scenario;
  json j;
  j["format_version"] = kFormatVersion;
  j["seed"] = sc.seed;
  j["dt"] = sc.dt;
  j["horizon"] = sc.horizon;
  j["history_len"] = sc.history_len;
  j["grid"] = {{"x_min", sc.grid.x_min()}, {"x_max", sc.grid.x_max()},
               {"y_min", sc.grid.y_min()}, {"y_max", sc.grid.y_max()},
               {"cell_size", sc.grid.cell_size}};
  json vehicles = json::array();
  for (const VehicleRecord& v : sc.vehicles) {
    json jv;
    jv["id"] = v.id;
    jv["archetype"] = v.archetype;
    jv["length"] = v.length;
    jv["width"] = v.width;
    jv["l_fr"] = v.l_fr;
    jv["pose"] = pose_to_json(v.pose);
    jv["true_pose"] = pose_to_json(v.true_pose);
    json hist = json::array();
    for (const Pose& p : v.history) hist.push_back(pose_to_json(p));
    jv["history"] = std::move(hist);
    json fut = json::array();
    for (const Pose& p : v.gt_future) fut.push_back(pose_to_json(p));
    jv["gt_future"] = std::move(fut);
    vehicles.push_back(std::move(jv));
  }
  j["vehicles"] = std::move(vehicles);
  if (!doc.planned.empty()) {
    json planned = json::array();
    for (const PlannedTrajectory& t : doc.planned) {
      json jt;
      jt["vehicle"] = t.vehicle_id;
      json pts = json::array();
      for (const PlannedPoint& p : t.points)
        pts.push_back(json::array({p.x, p.y, p.heading, p.speed}));
      jt["points"] = std::move(pts);
      planned.push_back(std::move(jt));
    }
    j["planned"] = std::move(planned);
  }
  dump_json(j, path);
}

ScenarioDocument load_scenario(const std::filesystem::path& path) {
  const json j = load_json(path);
  require_version(j, path.string());
  ScenarioDocument doc;
  Scenario& sc = doc.scenario;
  try {
    sc.seed = j.at("seed").get<std::uint64_t>();
    sc.dt = j.at("dt").get<double>();
    sc.horizon = j.at("horizon").get<int>();
    sc.history_len = j.at("history_len").get<int>();
    const json& g = j.at("grid");
    sc.grid = GridSpec::from_ranges(
        g.at("x_min").get<double>(), g.at("x_max").get<double>(),
        g.at("y_min").get<double>(), g.at("y_max").get<double>(),
        g.at("cell_size").get<double>());
    for (const json& jv : j.at("vehicles")) {
      VehicleRecord v;
      v.id = jv.at("id").get<int>();
      v.archetype = jv.at("archetype").get<int>();
      v.length = jv.at("length").get<double>();
      v.width = jv.at("width").get<double>();
      v.l_fr = jv.at("l_fr").get<double>();
      v.pose = pose_from_json(jv.at("pose"));
      v.true_pose = pose_from_json(jv.at("true_pose"));
      for (const json& jp : jv.at("history")) v.history.push_back(pose_from_json(jp));
      for (const json& jp : jv.at("gt_future")) v.gt_future.push_back(pose_from_json(jp));
      v.cell = world_to_cell({v.pose.x, v.pose.y}, sc.grid);
      sc.vehicles.push_back(std::move(v));
    }
    if (j.contains("planned")) {
      for (const json& jt : j.at("planned")) {
        PlannedTrajectory t;
        t.vehicle_id = jt.at("vehicle").get<int>();
        for (const json& jp : jt.at("points")) {
          if (!jp.is_array() || jp.size() != 4)
            throw FormatError("planned point must be an array of 4 numbers");
          t.points.push_back({jp[0].get<double>(), jp[1].get<double>(),
                              jp[2].get<double>(), jp[3].get<double>()});
        }
        doc.planned.push_back(std::move(t));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed scenario in " + path.string() + ": " + e.what());
  }
  sc.features = sim::compute_features(sc);
  sim::compute_ground_truth(sc);
  sc.validate();
  return doc;
}

void write_grid_stack(const GridStack& stack, const std::filesystem::path& path) {
  if (stack.steps.empty()) throw ShapeError("grid stack must have at least one step");
  const Eigen::Index rows = stack.steps.front().rows();
  const Eigen::Index cols = stack.steps.front().cols();
  for (const Eigen::MatrixXd& m : stack.steps)
    if (m.rows() != rows || m.cols() != cols)
      throw ShapeError("grid stack steps must share one shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(kMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(rows));
  write_u32(out, static_cast<std::uint32_t>(cols));
  write_u32(out, static_cast<std::uint32_t>(stack.steps.size()));
  write_u32(out, static_cast<std::uint32_t>(stack.kind));
  std::vector<char> payload(static_cast<std::size_t>(rows) * cols * 4);
  for (const Eigen::MatrixXd& m : stack.steps) {
    char* dst = payload.data();
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const float f = static_cast<float>(m(r, c));
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int i = 0; i < 4; ++i)
          *dst++ = static_cast<char>((bits >> (8 * i)) & 0xff);
      }
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

GridStack read_grid_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad magic in " + path.string());
  const std::uint32_t rows = read_u32(in, "height");
  const std::uint32_t cols = read_u32(in, "width");
  const std::uint32_t steps = read_u32(in, "step count");
  const std::uint32_t kind = read_u32(in, "element kind");
  if (rows == 0 || cols == 0 || steps == 0 ||
      static_cast<std::uint64_t>(rows) * cols > 100'000'000ull)
    throw FormatError("implausible grid dimensions in " + path.string());
  if (kind < 1 || kind > 6)
    throw FormatError("unknown element kind in " + path.string());
  GridStack stack;
  stack.kind = static_cast<GridKind>(kind);
  std::vector<char> payload(static_cast<std::size_t>(rows) * cols * 4);
  for (std::uint32_t t = 0; t < steps; ++t) {
    if (!in.read(payload.data(), static_cast<std::streamsize>(payload.size())))
      throw FormatError("truncated payload in " + path.string());
    Eigen::MatrixXd m(rows, cols);
    const char* src = payload.data();
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i)
          bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(*src++)) << (8 * i);
        float f;
        std::memcpy(&f, &bits, 4);
        m(r, c) = f;
      }
    }
    stack.steps.push_back(std::move(m));
  }
  return stack;
}

void write_tensors(const std::vector<NamedTensor>& tensors,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(kTensorMagic, 4);
  write_u32(out, 1);  // version
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    std::size_t expected = 1;
    for (std::uint32_t d : t.dims) expected *= d;
    if (t.dims.empty() || expected != t.data.size())
      throw ShapeError("tensor " + t.name + " payload does not match its dims");
    write_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) write_u32(out, d);
    for (float f : t.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      write_u32(out, bits);
    }
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

std::vector<NamedTensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kTensorMagic, 4) != 0)
    throw FormatError("bad magic in " + path.string());
  if (read_u32(in, "version") != 1)
    throw FormatError("unsupported tensor format version in " + path.string());
  const std::uint32_t count = read_u32(in, "tensor count");
  if (count > 10'000) throw FormatError("implausible tensor count in " + path.string());
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint32_t name_len = read_u32(in, "name length");
    if (name_len > 1024) throw FormatError("implausible tensor name in " + path.string());
    t.name.resize(name_len);
    if (!in.read(t.name.data(), name_len))
      throw FormatError("truncated tensor name in " + path.string());
    const std::uint32_t rank = read_u32(in, "rank");
    if (rank == 0 || rank > 8) throw FormatError("implausible tensor rank in " + path.string());
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(read_u32(in, "dim"));
      total *= t.dims.back();
    }
    if (total > 100'000'000ull)
      throw FormatError("implausible tensor size in " + path.string());
    t.data.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
      const std::uint32_t bits = read_u32(in, "payload");
      float f;
      std::memcpy(&f, &bits, 4);
      t.data[k] = f;
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

namespace {

NamedTensor tensor_from_matrix(const std::string& name, const Eigen::MatrixXd& m) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.data.push_back(static_cast<float>(m(r, c)));
  return t;
}

Eigen::MatrixXd matrix_from_tensor(const NamedTensor& t, const std::string& path) {
  if (t.dims.size() != 2)
    throw FormatError("tensor " + t.name + " in " + path + " must be rank 2");
  Eigen::MatrixXd m(t.dims[0], t.dims[1]);
  std::size_t k = 0;
  for (std::uint32_t r = 0; r < t.dims[0]; ++r)
    for (std::uint32_t c = 0; c < t.dims[1]; ++c) m(r, c) = t.data[k++];
  return m;
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors,
                               const std::string& name, const std::string& path) {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return t;
  throw FormatError("missing tensor " + name + " in " + path);
}

}  // namespace

void save_decoder(const DecoderParams& params, const std::filesystem::path& path) {
  params.validate();
  std::vector<NamedTensor> tensors;
  tensors.push_back(tensor_from_matrix("W", params.W));
  NamedTensor b;
  b.name = "b";
  b.dims = {static_cast<std::uint32_t>(params.b.size())};
  for (Eigen::Index i = 0; i < params.b.size(); ++i)
    b.data.push_back(static_cast<float>(params.b[i]));
  tensors.push_back(std::move(b));
  write_tensors(tensors, path);
}

DecoderParams load_decoder(const std::filesystem::path& path) {
  const std::vector<NamedTensor> tensors = read_tensors(path);
  DecoderParams params;
  params.W = matrix_from_tensor(find_tensor(tensors, "W", path.string()), path.string());
  const NamedTensor& b = find_tensor(tensors, "b", path.string());
  if (b.dims.size() != 1)
    throw FormatError("tensor b in " + path.string() + " must be rank 1");
  params.b.resize(b.dims[0]);
  for (std::uint32_t i = 0; i < b.dims[0]; ++i) params.b[i] = b.data[i];
  params.validate();
  return params;
}

void save_attention(const AttentionParams& params, const std::filesystem::path& path) {
  params.validate();
  std::vector<NamedTensor> tensors;
  for (int h = 0; h < params.num_heads; ++h)
    tensors.push_back(tensor_from_matrix("Wq" + std::to_string(h), params.Wq[h]));
  for (int h = 0; h < params.num_heads; ++h)
    tensors.push_back(tensor_from_matrix("Wk" + std::to_string(h), params.Wk[h]));
  for (int h = 0; h < params.num_heads; ++h)
    tensors.push_back(tensor_from_matrix("Wv" + std::to_string(h), params.Wv[h]));
  tensors.push_back(tensor_from_matrix("W_out", params.W_out));
  write_tensors(tensors, path);
}

AttentionParams load_attention(const std::filesystem::path& path) {
  const std::vector<NamedTensor> tensors = read_tensors(path);
  AttentionParams params;
  int heads = 0;
  for (const NamedTensor& t : tensors)
    if (t.name.rfind("Wq", 0) == 0) ++heads;
  if (heads == 0) throw FormatError("no query projections in " + path.string());
  params.num_heads = heads;
  const NamedTensor& w_out = find_tensor(tensors, "W_out", path.string());
  if (w_out.dims.size() != 2)
    throw FormatError("tensor W_out in " + path.string() + " must be rank 2");
  params.model_dim = static_cast<int>(w_out.dims[0]);
  for (int h = 0; h < heads; ++h) {
    const std::string idx = std::to_string(h);
    params.Wq.push_back(matrix_from_tensor(find_tensor(tensors, "Wq" + idx, path.string()), path.string()));
    params.Wk.push_back(matrix_from_tensor(find_tensor(tensors, "Wk" + idx, path.string()), path.string()));
    params.Wv.push_back(matrix_from_tensor(find_tensor(tensors, "Wv" + idx, path.string()), path.string()));
  }
  params.W_out = matrix_from_tensor(w_out, path.string());
  params.validate();
  return params;
}

namespace {

void write_csv_body(std::ofstream& out, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const std::vector<double>& row : rows) {
    if (row.size() != header.size())
      throw ShapeError("csv row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

}  // namespace

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  write_csv_body(out, header, rows);
  if (!out) throw FormatError("failed writing " + path.string());
}

void write_metric_table(const std::filesystem::path& path,
                        const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "# metrics-table v1\n";
  write_csv_body(out, header, rows);
  if (!out) throw FormatError("failed writing " + path.string());
}

void write_metric_summary(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, double>>& metrics) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "metric-summary";
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  j["metrics"] = std::move(m);
  dump_json(j, path);
}

sim::SuiteConfig load_suite_config(const std::filesystem::path& path) {
  const json j = load_json(path);
  require_version(j, path.string());
  sim::SuiteConfig cfg;
  try {
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("scenarios_per_cell"))
      cfg.scenarios_per_cell = j["scenarios_per_cell"].get<int>();
    if (j.contains("noise_levels"))
      cfg.noise_levels = j["noise_levels"].get<std::vector<double>>();
    if (j.contains("delays_ms"))
      cfg.delays_ms = j["delays_ms"].get<std::vector<int>>();
    if (j.contains("collision_threshold"))
      cfg.collision_threshold = j["collision_threshold"].get<double>();
    if (j.contains("generation")) {
      const json& g = j["generation"];
      sim::GenerationConfig& gen = cfg.generation;
      if (g.contains("dt")) gen.dt = g["dt"].get<double>();
      if (g.contains("horizon")) gen.horizon = g["horizon"].get<int>();
      if (g.contains("history_len")) gen.history_len = g["history_len"].get<int>();
      if (g.contains("min_vehicles")) gen.min_vehicles = g["min_vehicles"].get<int>();
      if (g.contains("max_vehicles")) gen.max_vehicles = g["max_vehicles"].get<int>();
      if (g.contains("min_speed")) gen.min_speed = g["min_speed"].get<double>();
      if (g.contains("max_speed")) gen.max_speed = g["max_speed"].get<double>();
      if (g.contains("min_separation")) gen.min_separation = g["min_separation"].get<double>();
      if (g.contains("border_margin")) gen.border_margin = g["border_margin"].get<double>();
      if (g.contains("mix")) {
        const auto mix = g["mix"].get<std::vector<double>>();
        if (mix.size() != sim::kArchetypeCount)
          throw FormatError("generation.mix must have 3 entries in " + path.string());
        for (int i = 0; i < sim::kArchetypeCount; ++i) cfg.generation.mix[i] = mix[i];
      }
    }
    if (j.contains("planner")) {
      const json& p = j["planner"];
      if (p.contains("v_max")) cfg.planner.v_max = p["v_max"].get<double>();
      if (p.contains("relinearize")) cfg.planner.relinearize = p["relinearize"].get<bool>();
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed suite config in " + path.string() + ": " + e.what());
  }
  cfg.planner.dt = cfg.generation.dt;
  cfg.planner.horizon = cfg.generation.horizon;
  cfg.oracle = sim::OracleConfig::defaults(cfg.generation.horizon);
  cfg.oracle.seed = cfg.seed;
  return cfg;
}

}  // namespace riskmm::io
