#include "riskmm/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "riskmm/errors.hpp"
#include "riskmm/io.hpp"

namespace riskmm::render {

namespace {

constexpr double kStops[5][3] = {{13, 8, 135},
                                 {126, 3, 168},
                                 {204, 71, 120},
                                 {248, 149, 64},
                                 {240, 249, 33}};

void check_style(const HeatMapStyle& style) {
  if (style.cell_px < 1) throw ConfigError("cell_px must be at least 1");
}

struct ValueRange {
  double lo = 0.0, hi = 0.0;
};

ValueRange value_range(const Eigen::MatrixXd& values) {
  if (values.size() == 0) throw ShapeError("cannot render an empty map");
  if (!values.allFinite()) throw NumericError("heat map values must be finite");
  return {values.minCoeff(), values.maxCoeff()};
}

std::string svg_point(double x, double y) {
  return io::format_double(x) + "," + io::format_double(-y);
}

void svg_polyline(std::ofstream& out, const std::vector<std::pair<double, double>>& pts,
                  const std::string& color, double width) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
      << io::format_double(width) << "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i)
    out << (i ? " " : "") << svg_point(pts[i].first, pts[i].second);
  out << "\"/>\n";
}

void svg_box(std::ofstream& out, const OrientedBox& box, const std::string& color) {
  const auto corners = box.corners();
  out << "<polygon fill=\"none\" stroke=\"" << color << "\" stroke-width=\"0.3\" points=\"";
  for (std::size_t i = 0; i < corners.size(); ++i)
    out << (i ? " " : "") << svg_point(corners[i].x, corners[i].y);
  out << "\"/>\n";
}

}  // namespace

std::array<unsigned char, 3> heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * 4.0;
  const int seg = std::min(3, static_cast<int>(pos));
  const double frac = pos - seg;
  std::array<unsigned char, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    const double v = kStops[seg][c] + frac * (kStops[seg + 1][c] - kStops[seg][c]);
    rgb[c] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
  return rgb;
}

void write_heat_map_ppm(const Eigen::MatrixXd& values,
                        const std::filesystem::path& path,
                        const HeatMapStyle& style) {
  check_style(style);
  const ValueRange range = value_range(values);
  const double span = range.hi - range.lo;

  const int rows = static_cast<int>(values.rows());
  const int cols = static_cast<int>(values.cols());
  const int px_w = cols * style.cell_px;
  const int px_h = rows * style.cell_px;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P6\n" << px_w << " " << px_h << "\n255\n";

  std::vector<unsigned char> scanline(static_cast<std::size_t>(px_w) * 3);
  for (int py = 0; py < px_h; ++py) {
    const int row = rows - 1 - py / style.cell_px;
    for (int col = 0; col < cols; ++col) {
      const double v = values(row, col);
      const double t = span > 0.0 ? (v - range.lo) / span : 0.0;
      const auto rgb = heat_color(t);
      for (int k = 0; k < style.cell_px; ++k) {
        const std::size_t base = (static_cast<std::size_t>(col) * style.cell_px + k) * 3;
        scanline[base] = rgb[0];
        scanline[base + 1] = rgb[1];
        scanline[base + 2] = rgb[2];
      }
    }
    out.write(reinterpret_cast<const char*>(scanline.data()),
              static_cast<std::streamsize>(scanline.size()));
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

void write_heat_map_legend(const Eigen::MatrixXd& values,
                           const std::filesystem::path& path,
                           const HeatMapStyle& style) {
  check_style(style);
  const ValueRange range = value_range(values);
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "{\n"
      << "  \"min\": " << io::format_double(range.lo) << ",\n"
      << "  \"max\": " << io::format_double(range.hi) << ",\n"
      << "  \"normalization\": \"per-map min-max\",\n"
      << "  \"cell_px\": " << style.cell_px << ",\n"
      << "  \"row0\": \"bottom\",\n"
      << "  \"color_stops\": [";
  for (int s = 0; s < 5; ++s) {
    out << (s ? ", " : "") << "[" << kStops[s][0] << ", " << kStops[s][1]
        << ", " << kStops[s][2] << "]";
  }
  out << "]\n}\n";
  if (!out) throw FormatError("failed writing " + path.string());
}

void write_scenario_svg(const Scenario& scenario,
                        std::span<const PlannedTrajectory> planned,
                        const std::filesystem::path& path) {
  const GridSpec& g = scenario.grid;
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\""
      << io::format_double(g.x_min()) << " " << io::format_double(-g.y_max())
      << " " << io::format_double(g.x_max() - g.x_min()) << " "
      << io::format_double(g.y_max() - g.y_min()) << "\">\n";
  out << "<rect x=\"" << io::format_double(g.x_min()) << "\" y=\""
      << io::format_double(-g.y_max()) << "\" width=\""
      << io::format_double(g.x_max() - g.x_min()) << "\" height=\""
      << io::format_double(g.y_max() - g.y_min())
      << "\" fill=\"#101018\" stroke=\"#444455\" stroke-width=\"0.4\"/>\n";

  for (const VehicleRecord& v : scenario.vehicles) {
    svg_box(out, v.true_box(), "#4fc3f7");
    std::vector<std::pair<double, double>> gt;
    gt.emplace_back(v.true_pose.x, v.true_pose.y);
    for (const Pose& p : v.gt_future) gt.emplace_back(p.x, p.y);
    svg_polyline(out, gt, "#81c784", 0.25);
  }
  for (const PlannedTrajectory& t : planned) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(t.points.size());
    for (const PlannedPoint& p : t.points) pts.emplace_back(p.x, p.y);
    svg_polyline(out, pts, "#ffb74d", 0.35);
  }
  out << "</svg>\n";
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace riskmm::render
