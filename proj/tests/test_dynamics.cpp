#include <Eigen/Dense>
#include <random>
#include <vector>

#include "doctest.h"
#include "riskmm/dynamics.hpp"
#include "riskmm/errors.hpp"

using namespace riskmm;

namespace {

std::vector<PlanState> rollout_scaled(const PlanState& x0,
                                      const std::vector<PlanControl>& controls,
                                      const LinearizedDynamics& dyn,
                                      double alpha) {
  PlanState sx0{alpha * x0.s, alpha * x0.v, alpha * x0.l, alpha * x0.phi};
  std::vector<PlanControl> su(controls.size());
  for (std::size_t i = 0; i < controls.size(); ++i)
    su[i] = {alpha * controls[i].a, alpha * controls[i].delta};
  return rollout(sx0, su, dyn);
}

}  // namespace

TEST_CASE("build_A matches the sparse linearized pattern") {
  SUBCASE("zero speed leaves only the position coupling") {
    const Eigen::Matrix4d A = build_A(0.0, 0.25);
    Eigen::Matrix4d expected = Eigen::Matrix4d::Identity();
    expected(0, 1) = 0.25;
    CHECK(A.isApprox(expected, 0.0));
  }

  SUBCASE("heading-to-lateral coupling scales with speed") {
    const Eigen::Matrix4d A = build_A(10.0, 0.5);
    CHECK(A(2, 3) == 5.0);
    CHECK(A(0, 1) == 0.5);
    for (int i = 0; i < 4; ++i) CHECK(A(i, i) == 1.0);
  }

  SUBCASE("hand multiplication: heading 0.1 at 10 m/s advances l by 0.5") {
    const Eigen::Matrix4d A = build_A(10.0, 0.5);
    const Eigen::Vector4d x{0.0, 10.0, 0.0, 0.1};
    const Eigen::Vector4d next = A * x;
    CHECK(next[2] == 0.5);
  }

  SUBCASE("non-finite speed is rejected") {
    CHECK_THROWS_AS(build_A(std::numeric_limits<double>::quiet_NaN(), 0.5),
                    NumericError);
    CHECK_THROWS_AS(build_A(std::numeric_limits<double>::infinity(), 0.5),
                    NumericError);
  }

  SUBCASE("all entries outside the pattern are exactly zero") {
    const Eigen::Matrix4d A = build_A(7.3, 0.5);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        if (r == c || (r == 0 && c == 1) || (r == 2 && c == 3)) continue;
        CHECK(A(r, c) == 0.0);
      }
  }
}

TEST_CASE("build_B matches the control pattern") {
  SUBCASE("steering has no heading effect at standstill") {
    const auto B = build_B(0.0, 0.5, 2.5);
    CHECK(B(3, 1) == 0.0);
  }

  SUBCASE("direct evaluation at v=8, l_fr=2") {
    const auto B = build_B(8.0, 0.5, 2.0);
    CHECK(B(3, 1) == 2.0);
  }

  SUBCASE("acceleration channel only depends on dt") {
    for (double v : {0.0, 3.0, 20.0}) {
      const auto B = build_B(v, 0.5, 2.5);
      CHECK(B(1, 0) == 0.5);
    }
  }

  SUBCASE("non-positive axle distance is rejected") {
    CHECK_THROWS_AS(build_B(5.0, 0.5, 0.0), GeometryError);
    CHECK_THROWS_AS(build_B(5.0, 0.5, -1.0), GeometryError);
  }

  SUBCASE("all entries outside the pattern are exactly zero") {
    const auto B = build_B(6.0, 0.5, 2.2);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 2; ++c) {
        if ((r == 1 && c == 0) || (r == 3 && c == 1)) continue;
        CHECK(B(r, c) == 0.0);
      }
  }
}

TEST_CASE("linearize builds a constant-speed model") {
  const PlanState x0{0.0, 12.0, 0.0, 0.0};
  const LinearizedDynamics dyn = linearize(x0, 7, 0.5, 2.8);
  CHECK(dyn.horizon() == 7);
  CHECK(dyn.A.size() == 6);
  CHECK(dyn.B.size() == 6);
  CHECK(dyn.speeds.size() == 6);
  for (double v : dyn.speeds) CHECK(v == 12.0);
  for (const auto& A : dyn.A) CHECK(A(2, 3) == doctest::Approx(6.0));
  for (const auto& B : dyn.B)
    CHECK(B(3, 1) == doctest::Approx(0.5 * 12.0 / 2.8));
}

TEST_CASE("linearize_at_speeds honors an explicit profile") {
  const std::vector<double> speeds{4.0, 8.0, 16.0};
  const LinearizedDynamics dyn = linearize_at_speeds(speeds, 0.5, 2.0);
  CHECK(dyn.horizon() == 4);
  for (std::size_t k = 0; k < speeds.size(); ++k) {
    CHECK(dyn.A[k](2, 3) == doctest::Approx(0.5 * speeds[k]));
    CHECK(dyn.B[k](3, 1) == doctest::Approx(0.5 * speeds[k] / 2.0));
  }
}

TEST_CASE("rollout applies the linear recursion") {
  const LinearizedDynamics dyn = linearize({0.0, 10.0, 0.0, 0.0}, 4, 0.5, 2.5);

  SUBCASE("constant cruise advances s by v*dt each step") {
    const std::vector<PlanControl> zero(3);
    const auto states = rollout({0.0, 10.0, 0.0, 0.0}, zero, dyn);
    REQUIRE(states.size() == 4);
    const double expected_s[] = {0.0, 5.0, 10.0, 15.0};
    for (int k = 0; k < 4; ++k) {
      CHECK(states[k].s == expected_s[k]);
      CHECK(states[k].v == 10.0);
    }
  }

  SUBCASE("all-zero start with zero controls stays at zero") {
    const std::vector<PlanControl> zero(3);
    const auto states = rollout({}, zero, dyn);
    for (const auto& x : states) {
      CHECK(x.s == 0.0);
      CHECK(x.v == 0.0);
      CHECK(x.l == 0.0);
      CHECK(x.phi == 0.0);
    }
  }

  SUBCASE("one acceleration step raises the next speed by dt*a") {
    std::vector<PlanControl> controls(3);
    controls[0].a = 2.0;
    const auto states = rollout({0.0, 10.0, 0.0, 0.0}, controls, dyn);
    CHECK(states[1].v == 11.0);
    CHECK(states[2].v == 11.0);
  }

  SUBCASE("control count must match the horizon") {
    const std::vector<PlanControl> wrong(2);
    CHECK_THROWS_AS(rollout({}, wrong, dyn), ShapeError);
  }
}

TEST_CASE("rollout is linear in the initial state and controls") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const LinearizedDynamics dyn = linearize({0.0, 9.0, 0.0, 0.0}, 5, 0.5, 2.4);

  for (int trial = 0; trial < 20; ++trial) {
    const PlanState x0{unit(rng), 5.0 * unit(rng), unit(rng), 0.3 * unit(rng)};
    const PlanState y0{unit(rng), 5.0 * unit(rng), unit(rng), 0.3 * unit(rng)};
    std::vector<PlanControl> u(4), w(4);
    for (auto& c : u) c = {unit(rng), 0.2 * unit(rng)};
    for (auto& c : w) c = {unit(rng), 0.2 * unit(rng)};

    const auto base = rollout(x0, u, dyn);
    const auto scaled = rollout_scaled(x0, u, dyn, 3.0);
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(scaled[k].s == doctest::Approx(3.0 * base[k].s));
      CHECK(scaled[k].v == doctest::Approx(3.0 * base[k].v));
      CHECK(scaled[k].l == doctest::Approx(3.0 * base[k].l));
      CHECK(scaled[k].phi == doctest::Approx(3.0 * base[k].phi));
    }

    const auto other = rollout(y0, w, dyn);
    PlanState sum0{x0.s + y0.s, x0.v + y0.v, x0.l + y0.l, x0.phi + y0.phi};
    std::vector<PlanControl> sum_u(4);
    for (int i = 0; i < 4; ++i)
      sum_u[i] = {u[i].a + w[i].a, u[i].delta + w[i].delta};
    const auto super = rollout(sum0, sum_u, dyn);
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(super[k].s == doctest::Approx(base[k].s + other[k].s));
      CHECK(super[k].v == doctest::Approx(base[k].v + other[k].v));
      CHECK(super[k].l == doctest::Approx(base[k].l + other[k].l));
      CHECK(super[k].phi == doctest::Approx(base[k].phi + other[k].phi));
    }
  }
}

TEST_CASE("zero heading and zero control keep the lateral channel at zero") {
  const LinearizedDynamics dyn = linearize({0.0, 14.0, 0.0, 0.0}, 7, 0.5, 3.0);
  std::vector<PlanControl> controls(6);
  for (auto& c : controls) c.a = 1.5;  // longitudinal input only
  const auto states = rollout({2.0, 14.0, 0.0, 0.0}, controls, dyn);
  for (const auto& x : states) {
    CHECK(x.l == 0.0);
    CHECK(x.phi == 0.0);
  }
}
