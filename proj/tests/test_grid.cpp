#include <doctest.h>

#include <algorithm>
#include <vector>

#include "riskmm/errors.hpp"
#include "riskmm/grid.hpp"

using namespace riskmm;

namespace {

Eigen::MatrixXd brute_force_raster(std::span<const OrientedBox> boxes,
                                   const GridSpec& spec) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(spec.height_cells, spec.width_cells);
  for (int r = 0; r < spec.height_cells; ++r) {
    for (int c = 0; c < spec.width_cells; ++c) {
      const Vec2 center = cell_to_world({r, c}, spec);
      for (const OrientedBox& b : boxes)
        if (b.contains(center)) out(r, c) = 1.0;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("default grid covers the evaluation range with 100 x 176 cells") {
  const GridSpec g = GridSpec::defaults();
  CHECK(g.height_cells == 100);
  CHECK(g.width_cells == 176);
  CHECK(g.cell_size == doctest::Approx(0.8));
  CHECK(g.x_min() == doctest::Approx(-70.4));
  CHECK(g.x_max() == doctest::Approx(70.4));
  CHECK(g.y_min() == doctest::Approx(-40.0));
  CHECK(g.y_max() == doctest::Approx(40.0));
  CHECK(g.cell_count() == 17600);
}

TEST_CASE("from_ranges rejects ranges that are not cell multiples") {
  CHECK_THROWS_AS(GridSpec::from_ranges(0.0, 1.0, 0.0, 1.0, 0.3), ConfigError);
  CHECK_THROWS_AS(GridSpec::from_ranges(0.0, 1.0, 0.0, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(GridSpec::from_ranges(0.0, 1.0, 0.0, 1.0, -0.5), ConfigError);
  CHECK_NOTHROW(GridSpec::from_ranges(0.0, 1.2, 0.0, 0.8, 0.4));
}

TEST_CASE("world_to_cell maps corners, centers, and offsets") {
  const GridSpec g = GridSpec::defaults();

  CHECK(world_to_cell({g.x_min(), g.y_min()}, g) == CellIndex{0, 0});
  CHECK(world_to_cell({0.0, 0.0}, g) == CellIndex{50, 88});

  const Vec2 offset{g.x_min() + 2.5 * g.cell_size, g.y_min() + 1.5 * g.cell_size};
  CHECK(world_to_cell(offset, g) == CellIndex{1, 2});

  SUBCASE("the exact outer max boundary belongs to the last cell") {
    CHECK(world_to_cell({g.x_max(), g.y_max()}, g) ==
          CellIndex{g.height_cells - 1, g.width_cells - 1});
  }

  SUBCASE("out-of-range positions name the offending axis") {
    try {
      world_to_cell({g.x_max() + 1.0, 0.0}, g);
      FAIL("expected OutOfGrid");
    } catch (const OutOfGrid& e) {
      CHECK(e.axis() == 'x');
    }
    try {
      world_to_cell({0.0, g.y_min() - 0.1}, g);
      FAIL("expected OutOfGrid");
    } catch (const OutOfGrid& e) {
      CHECK(e.axis() == 'y');
    }
  }
}

TEST_CASE("cell_to_world returns centers and round-trips exactly") {
  const GridSpec g = GridSpec::from_ranges(0.0, 4.5, 0.0, 3.5, 0.5);
  CHECK(g.height_cells == 7);
  CHECK(g.width_cells == 9);

  const Vec2 c00 = cell_to_world({0, 0}, g);
  CHECK(c00.x == doctest::Approx(0.25));
  CHECK(c00.y == doctest::Approx(0.25));

  for (int r = 0; r < g.height_cells; ++r)
    for (int c = 0; c < g.width_cells; ++c)
      CHECK(world_to_cell(cell_to_world({r, c}, g), g) == CellIndex{r, c});

  CHECK_THROWS_AS(cell_to_world({7, 0}, g), OutOfGrid);
  CHECK_THROWS_AS(cell_to_world({0, -1}, g), OutOfGrid);
}

TEST_CASE("round trip from a position stays within half a cell per axis") {
  const GridSpec g = GridSpec::defaults();
  const double xs[] = {-70.4, -12.34, 0.0, 3.999, 70.4};
  const double ys[] = {-40.0, -0.5, 17.3, 40.0};
  for (double x : xs) {
    for (double y : ys) {
      const Vec2 back = cell_to_world(world_to_cell({x, y}, g), g);
      CHECK(std::abs(back.x - x) <= g.cell_size / 2 + 1e-12);
      CHECK(std::abs(back.y - y) <= g.cell_size / 2 + 1e-12);
    }
  }
}

TEST_CASE("flat indexing is row-major") {
  GridSpec g;
  g.height_cells = 3;
  g.width_cells = 4;
  g.cell_size = 1.0;
  CHECK(g.flat_index({1, 2}) == 6);
  CHECK(g.unflatten(6) == CellIndex{1, 2});
  for (int k = 0; k < g.cell_count(); ++k) CHECK(g.flat_index(g.unflatten(k)) == k);
}

TEST_CASE("rasterization uses strict cell-center membership") {
  const GridSpec g = GridSpec::from_ranges(0.0, 8.0, 0.0, 8.0, 1.0);

  SUBCASE("empty vehicle list gives an all-zero slice") {
    const Eigen::MatrixXd slice = rasterize_vehicles({}, g);
    CHECK(slice.rows() == 8);
    CHECK(slice.cols() == 8);
    CHECK(slice.cwiseAbs().sum() == 0.0);
  }

  SUBCASE("a 2-cell-long box centered on a shared cell edge covers 2 cells") {
    // Box center sits on the edge between cells (4,3) and (4,4); both centers
    // lie strictly inside, all other centers strictly outside.
    const OrientedBox box{{4.0, 4.5}, 2.0, 1.0, 0.0};
    const std::vector<OrientedBox> boxes = {box};
    const Eigen::MatrixXd slice = rasterize_vehicles(boxes, g);
    CHECK(slice.sum() == doctest::Approx(2.0));
    CHECK(slice(4, 3) == 1.0);
    CHECK(slice(4, 4) == 1.0);
    CHECK(slice == brute_force_raster(boxes, g));
  }

  SUBCASE("centering the same box on a cell center keeps only that cell") {
    // Neighboring centers land exactly on the box edge; strict containment
    // excludes them.
    const std::vector<OrientedBox> boxes = {{{4.5, 4.5}, 2.0, 1.0, 0.0}};
    const Eigen::MatrixXd slice = rasterize_vehicles(boxes, g);
    CHECK(slice.sum() == doctest::Approx(1.0));
    CHECK(slice(4, 4) == 1.0);
    CHECK(slice == brute_force_raster(boxes, g));
  }

  SUBCASE("rotated boxes match the brute-force scan") {
    const std::vector<OrientedBox> boxes = {{{3.7, 4.1}, 3.0, 1.6, 0.7},
                                            {{6.0, 2.0}, 2.4, 1.2, -1.2}};
    CHECK(rasterize_vehicles(boxes, g) == brute_force_raster(boxes, g));
  }

  SUBCASE("disjoint vehicles OR together") {
    const std::vector<OrientedBox> a = {{{2.0, 2.0}, 2.0, 1.5, 0.3}};
    const std::vector<OrientedBox> b = {{{6.0, 6.0}, 2.0, 1.5, -0.4}};
    std::vector<OrientedBox> both = a;
    both.insert(both.end(), b.begin(), b.end());
    const Eigen::MatrixXd ored =
        (rasterize_vehicles(a, g) + rasterize_vehicles(b, g)).cwiseMin(1.0);
    CHECK(rasterize_vehicles(both, g) == ored);
  }

  SUBCASE("vehicle order does not matter") {
    std::vector<OrientedBox> boxes = {{{2.0, 2.0}, 2.0, 1.5, 0.3},
                                      {{6.0, 6.0}, 2.0, 1.5, -0.4},
                                      {{4.0, 5.0}, 3.2, 1.8, 1.1}};
    const Eigen::MatrixXd reference = rasterize_vehicles(boxes, g);
    std::reverse(boxes.begin(), boxes.end());
    CHECK(rasterize_vehicles(boxes, g) == reference);
  }

  SUBCASE("a box centered outside the grid raises OutOfGrid") {
    const std::vector<OrientedBox> boxes = {{{9.5, 4.0}, 2.0, 1.0, 0.0}};
    CHECK_THROWS_AS(rasterize_vehicles(boxes, g), OutOfGrid);
  }
}

TEST_CASE("occupancy grid validation enforces shape, range, and dt") {
  const GridSpec g = GridSpec::from_ranges(0.0, 2.0, 0.0, 2.0, 1.0);
  OccupancyGrid occ;
  occ.dt = 0.5;
  occ.steps = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Ones(2, 2)};
  CHECK_NOTHROW(occ.validate(g));
  CHECK(occ.horizon() == 2);

  SUBCASE("empty") {
    occ.steps.clear();
    CHECK_THROWS_AS(occ.validate(g), ShapeError);
  }
  SUBCASE("wrong shape") {
    occ.steps.push_back(Eigen::MatrixXd::Zero(3, 2));
    CHECK_THROWS_AS(occ.validate(g), ShapeError);
  }
  SUBCASE("value outside [0,1]") {
    occ.steps[1](0, 0) = 1.5;
    CHECK_THROWS_AS(occ.validate(g), NumericError);
  }
  SUBCASE("nonpositive dt") {
    occ.dt = 0.0;
    CHECK_THROWS_AS(occ.validate(g), ConfigError);
  }
}

TEST_CASE("flow field validation checks shapes and finiteness") {
  const GridSpec g = GridSpec::from_ranges(0.0, 2.0, 0.0, 2.0, 1.0);
  FlowField flow;
  flow.steps.push_back({Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)});
  CHECK_NOTHROW(flow.validate(g));

  flow.steps.push_back({Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 2)});
  CHECK_THROWS_AS(flow.validate(g), ShapeError);

  flow.steps.pop_back();
  flow.steps[0].d_row(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(flow.validate(g), NumericError);
}

TEST_CASE("feature grids store flattened channels") {
  FeatureGrid f(3, 4, 2);
  f.at(1, 2, 0) = 5.0;
  f.at(1, 2, 1) = -1.0;
  CHECK(f.at(1, 2, 0) == 5.0);
  CHECK(f.values()(6, 0) == 5.0);
  CHECK(f.values()(6, 1) == -1.0);
  CHECK_NOTHROW(f.validate());

  SUBCASE("flatten_features returns the row-major matrix") {
    const Eigen::MatrixXd flat = flatten_features(f);
    CHECK(flat.rows() == 12);
    CHECK(flat.cols() == 2);
    CHECK(flat(6, 0) == 5.0);
  }

  SUBCASE("1x1 grid flattens to the single cell's features") {
    FeatureGrid tiny(1, 1, 3);
    tiny.at(0, 0, 0) = 1.0;
    tiny.at(0, 0, 1) = 2.0;
    tiny.at(0, 0, 2) = 3.0;
    const Eigen::MatrixXd flat = flatten_features(tiny);
    CHECK(flat.rows() == 1);
    CHECK(flat(0, 0) == 1.0);
    CHECK(flat(0, 2) == 3.0);
  }

  SUBCASE("2x2 rows come out in order (0,0),(0,1),(1,0),(1,1)") {
    FeatureGrid four(2, 2, 1);
    four.at(0, 0, 0) = 0.0;
    four.at(0, 1, 0) = 1.0;
    four.at(1, 0, 0) = 2.0;
    four.at(1, 1, 0) = 3.0;
    const Eigen::MatrixXd flat = flatten_features(four);
    for (int k = 0; k < 4; ++k) CHECK(flat(k, 0) == doctest::Approx(k));
  }

  SUBCASE("non-finite values fail validation") {
    f.at(0, 0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(f.validate(), NumericError);
  }

  SUBCASE("out-of-range channel access throws") {
    CHECK_THROWS_AS(f.at(0, 0, 2), ShapeError);
    CHECK_THROWS_AS(f.at(3, 0, 0), ShapeError);
  }
}

TEST_CASE("risk maps must be row-stochastic") {
  RiskMap map;
  map.height = 1;
  map.width = 4;
  map.weights.resize(2, 4);
  map.weights << 0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1, 0.1;
  CHECK_NOTHROW(map.validate());

  SUBCASE("row sum off by more than 1e-6 fails") {
    map.weights(0, 0) = 0.2501;
    CHECK_THROWS_AS(map.validate(), NumericError);
  }
  SUBCASE("negative weight fails") {
    map.weights(1, 0) = 1.1;
    map.weights(1, 1) = -0.1;
    map.weights(1, 2) = 0.0;
    map.weights(1, 3) = 0.0;
    CHECK_THROWS_AS(map.validate(), NumericError);
  }
  SUBCASE("column count must match the grid") {
    map.width = 5;
    CHECK_THROWS_AS(map.validate(), ShapeError);
  }
}

TEST_CASE("cost maps require 14 parameters per step") {
  CostMap cm;
  cm.per_vehicle.push_back(Eigen::MatrixXd::Zero(7, kCostParamsPerStep));
  CHECK_NOTHROW(cm.validate());
  cm.per_vehicle.push_back(Eigen::MatrixXd::Zero(7, 13));
  CHECK_THROWS_AS(cm.validate(), ShapeError);
}
