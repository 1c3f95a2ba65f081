#include "riskmm/dynamics.hpp"

#include <cmath>

#include "riskmm/errors.hpp"

namespace riskmm {

Eigen::Matrix4d build_A(double v_k, double dt) {
  if (!std::isfinite(v_k)) throw NumericError("linearization speed must be finite");
  if (dt <= 0.0) throw ConfigError("dt must be positive");
  Eigen::Matrix4d A = Eigen::Matrix4d::Identity();
  A(0, 1) = dt;
  A(2, 3) = dt * v_k;
  return A;
}

Eigen::Matrix<double, 4, 2> build_B(double v_k, double dt, double l_fr) {
  if (!std::isfinite(v_k)) throw NumericError("linearization speed must be finite");
  if (dt <= 0.0) throw ConfigError("dt must be positive");
  if (l_fr <= 0.0) throw GeometryError("axle distance l_fr must be positive");
  Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
  B(1, 0) = dt;
  B(3, 1) = dt * v_k / l_fr;
  return B;
}

LinearizedDynamics linearize_at_speeds(std::span<const double> speeds, double dt,
                                       double l_fr) {
  if (speeds.empty()) throw ShapeError("need at least one linearization speed");
  LinearizedDynamics dyn;
  dyn.dt = dt;
  dyn.l_fr = l_fr;
  dyn.speeds.assign(speeds.begin(), speeds.end());
  dyn.A.reserve(speeds.size());
  dyn.B.reserve(speeds.size());
  for (double v : speeds) {
    dyn.A.push_back(build_A(v, dt));
    dyn.B.push_back(build_B(v, dt, l_fr));
  }
  return dyn;
}

LinearizedDynamics linearize(const PlanState& x0, int horizon, double dt,
                             double l_fr) {
  if (horizon < 2) throw ShapeError("horizon must be at least 2");
  std::vector<double> speeds(static_cast<std::size_t>(horizon) - 1, x0.v);
  return linearize_at_speeds(speeds, dt, l_fr);
}

std::vector<PlanState> rollout(const PlanState& x0,
                               std::span<const PlanControl> controls,
                               const LinearizedDynamics& dyn) {
  if (controls.size() != dyn.A.size())
    throw ShapeError("control count must match linearized horizon");
  std::vector<PlanState> states;
  states.reserve(controls.size() + 1);
  states.push_back(x0);
  Eigen::Vector4d x = x0.to_vector();
  for (std::size_t k = 0; k < controls.size(); ++k) {
    x = dyn.A[k] * x + dyn.B[k] * controls[k].to_vector();
    states.push_back(PlanState::from_vector(x));
  }
  return states;
}

}  // namespace riskmm
