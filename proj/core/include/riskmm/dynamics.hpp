#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace riskmm {

/// Planner state in the ego frame: longitudinal position, speed, lateral
/// position, heading.
struct PlanState {
  double s = 0.0;
  double v = 0.0;
  double l = 0.0;
  double phi = 0.0;

  Eigen::Vector4d to_vector() const { return {s, v, l, phi}; }
  static PlanState from_vector(const Eigen::Vector4d& x) {
    return {x[0], x[1], x[2], x[3]};
  }
};

/// Planner control: acceleration and front wheel angle.
struct PlanControl {
  double a = 0.0;
  double delta = 0.0;

  Eigen::Vector2d to_vector() const { return {a, delta}; }
};

Eigen::Matrix4d build_A(double v_k, double dt);
Eigen::Matrix<double, 4, 2> build_B(double v_k, double dt, double l_fr);

/// Time-varying linear model X_{k+1} = A_k X_k + B_k U_k over a horizon.
struct LinearizedDynamics {
  std::vector<Eigen::Matrix4d> A;
  std::vector<Eigen::Matrix<double, 4, 2>> B;
  double dt = 0.0;
  double l_fr = 0.0;
  std::vector<double> speeds;  // linearization speed per step, length T-1

  int horizon() const { return static_cast<int>(A.size()) + 1; }
};

/// Linearize around an explicit speed profile (length T-1).
LinearizedDynamics linearize_at_speeds(std::span<const double> speeds, double dt,
                                       double l_fr);

/// Default policy: every step linearized at the measured current speed, which
/// keeps the planning problem a single linear solve.
LinearizedDynamics linearize(const PlanState& x0, int horizon, double dt,
                             double l_fr);

/// Apply the linear recursion; returns T states starting with x0. Heading is
/// left unwrapped so the map stays linear.
std::vector<PlanState> rollout(const PlanState& x0,
                               std::span<const PlanControl> controls,
                               const LinearizedDynamics& dyn);

}  // namespace riskmm
