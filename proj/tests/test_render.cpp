#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "riskmm/errors.hpp"
#include "riskmm/harness.hpp"
#include "riskmm/render.hpp"

namespace fs = std::filesystem;
using namespace riskmm;

namespace {

fs::path scratch(const std::string& name) {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "riskmm-render-tests";
    fs::create_directories(d);
    return d;
  }();
  return dir / name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string rgb_bytes(const std::array<unsigned char, 3>& c) {
  return std::string{static_cast<char>(c[0]), static_cast<char>(c[1]),
                     static_cast<char>(c[2])};
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t at = text.find(needle); at != std::string::npos;
       at = text.find(needle, at + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("heat colors interpolate the five-stop gradient") {
  CHECK(render::heat_color(0.0) == std::array<unsigned char, 3>{13, 8, 135});
  CHECK(render::heat_color(0.25) == std::array<unsigned char, 3>{126, 3, 168});
  CHECK(render::heat_color(0.5) == std::array<unsigned char, 3>{204, 71, 120});
  CHECK(render::heat_color(0.75) == std::array<unsigned char, 3>{248, 149, 64});
  CHECK(render::heat_color(1.0) == std::array<unsigned char, 3>{240, 249, 33});

  SUBCASE("inputs are clamped") {
    CHECK(render::heat_color(-3.0) == render::heat_color(0.0));
    CHECK(render::heat_color(7.0) == render::heat_color(1.0));
  }

  SUBCASE("midpoints round linearly") {
    CHECK(render::heat_color(0.125) == std::array<unsigned char, 3>{70, 6, 152});
  }
}

TEST_CASE("heat map pixels land on the right cells") {
  render::HeatMapStyle style;
  style.cell_px = 1;

  SUBCASE("row zero is drawn at the bottom") {
    Eigen::MatrixXd values(2, 1);
    values(0, 0) = 0.0;  // bottom cell, coldest
    values(1, 0) = 1.0;  // top cell, hottest
    const fs::path path = scratch("updown.ppm");
    render::write_heat_map_ppm(values, path, style);
    CHECK(slurp(path) == "P6\n1 2\n255\n" + rgb_bytes(render::heat_color(1.0)) +
                             rgb_bytes(render::heat_color(0.0)));
  }

  SUBCASE("the hottest cell gets the top gradient stop") {
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(3, 3);
    values(2, 1) = 5.0;
    const fs::path path = scratch("argmax.ppm");
    render::write_heat_map_ppm(values, path, style);
    const std::string bytes = slurp(path);
    const std::string header = "P6\n3 3\n255\n";
    REQUIRE(bytes.substr(0, header.size()) == header);
    const std::string payload = bytes.substr(header.size());
    REQUIRE(payload.size() == 27);
    // grid row 2 is the top scanline, so the hot pixel is index 1
    for (int px = 0; px < 9; ++px) {
      const std::string rgb = payload.substr(static_cast<std::size_t>(px) * 3, 3);
      if (px == 1)
        CHECK(rgb == rgb_bytes(render::heat_color(1.0)));
      else
        CHECK(rgb == rgb_bytes(render::heat_color(0.0)));
    }
  }

  SUBCASE("a constant map renders the low color everywhere") {
    const Eigen::MatrixXd values = Eigen::MatrixXd::Constant(2, 2, 7.0);
    const fs::path path = scratch("flat.ppm");
    render::write_heat_map_ppm(values, path, style);
    const std::string bytes = slurp(path);
    const std::string expected = rgb_bytes(render::heat_color(0.0));
    for (int px = 0; px < 4; ++px)
      CHECK(bytes.substr(11 + static_cast<std::size_t>(px) * 3, 3) == expected);
  }

  SUBCASE("cell_px scales pixel blocks") {
    render::HeatMapStyle wide;
    wide.cell_px = 3;
    const Eigen::MatrixXd values = Eigen::MatrixXd::Constant(1, 2, 0.5);
    const fs::path path = scratch("scaled.ppm");
    render::write_heat_map_ppm(values, path, wide);
    const std::string bytes = slurp(path);
    CHECK(bytes.substr(0, 11) == "P6\n6 3\n255\n");
    CHECK(bytes.size() == 11 + 6 * 3 * 3);
  }

  SUBCASE("rendering is byte-stable") {
    Eigen::MatrixXd values(2, 3);
    values << 0.0, 0.5, 1.0, -2.0, 3.0, 0.25;
    const fs::path a = scratch("stable_a.ppm");
    const fs::path b = scratch("stable_b.ppm");
    render::write_heat_map_ppm(values, a);
    render::write_heat_map_ppm(values, b);
    CHECK(slurp(a) == slurp(b));
  }
}

TEST_CASE("heat map writers validate their inputs") {
  const Eigen::MatrixXd ok = Eigen::MatrixXd::Zero(2, 2);

  CHECK_THROWS_AS(render::write_heat_map_ppm(Eigen::MatrixXd(), scratch("bad.ppm")),
                  ShapeError);
  Eigen::MatrixXd nan = ok;
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(render::write_heat_map_ppm(nan, scratch("bad.ppm")), NumericError);

  render::HeatMapStyle bad_style;
  bad_style.cell_px = 0;
  CHECK_THROWS_AS(render::write_heat_map_ppm(ok, scratch("bad.ppm"), bad_style),
                  ConfigError);
  CHECK_THROWS_AS(render::write_heat_map_legend(ok, scratch("bad.json"), bad_style),
                  ConfigError);
  CHECK_THROWS_AS(render::write_heat_map_legend(Eigen::MatrixXd(), scratch("bad.json")),
                  ShapeError);
}

TEST_CASE("legends describe the palette and value range") {
  Eigen::MatrixXd values(1, 2);
  values << -1.5, 2.0;
  const fs::path path = scratch("legend.json");
  render::write_heat_map_legend(values, path);
  CHECK(slurp(path) ==
        "{\n"
        "  \"min\": -1.5,\n"
        "  \"max\": 2,\n"
        "  \"normalization\": \"per-map min-max\",\n"
        "  \"cell_px\": 4,\n"
        "  \"row0\": \"bottom\",\n"
        "  \"color_stops\": [[13, 8, 135], [126, 3, 168], [204, 71, 120], "
        "[248, 149, 64], [240, 249, 33]]\n"
        "}\n");
}

TEST_CASE("scenario overlays draw every vehicle and plan") {
  sim::GenerationConfig cfg;
  cfg.min_vehicles = 3;
  cfg.max_vehicles = 3;
  const Scenario scenario = sim::generate_scenario(cfg, 17);

  std::vector<PlannedTrajectory> planned(1);
  planned[0].vehicle_id = 0;
  planned[0].points = {{0.0, 0.0, 0.0, 5.0}, {2.5, 0.1, 0.0, 5.0}};

  const fs::path path = scratch("scene.svg");
  render::write_scenario_svg(scenario, planned, path);
  const std::string svg = slurp(path);

  CHECK(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
  CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
  CHECK(count_occurrences(svg, "<rect") == 1);
  CHECK(count_occurrences(svg, "<polygon") == 3);
  // one ground-truth polyline per vehicle plus the planned overlay
  CHECK(count_occurrences(svg, "<polyline") == 4);
  CHECK(svg.find("2.5,-0.1") != std::string::npos);

  SUBCASE("rendering is byte-stable") {
    const fs::path again = scratch("scene_again.svg");
    render::write_scenario_svg(scenario, planned, again);
    CHECK(slurp(again) == slurp(path));
  }

  SUBCASE("plans are optional") {
    const fs::path bare = scratch("scene_bare.svg");
    render::write_scenario_svg(scenario, {}, bare);
    CHECK(count_occurrences(slurp(bare), "<polyline") == 3);
  }
}
