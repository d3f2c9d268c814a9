#include "vpc_cilqr/planning/lateral_planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vpc_cilqr::planning {

using ilqr::Matrix;
using ilqr::Vector;

void VehicleParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("vehicle.") + name + " must be positive");
  };
  positive(mass, "mass");
  positive(c_alpha_front, "c_alpha_front");
  positive(c_alpha_rear, "c_alpha_rear");
  positive(l_front, "l_front");
  positive(l_rear, "l_rear");
  positive(yaw_inertia, "yaw_inertia");
}

void LateralTuning::validate() const {
  if (horizon < 1) throw std::invalid_argument("lateral.horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("lateral.dt must be positive");
  if (!(R > 0.0)) throw std::invalid_argument("lateral.r_steer must be positive");
  if (Q.rows() != 4 || Q.cols() != 4 || !Q.allFinite() || (Q.diagonal().array() < 0.0).any())
    throw std::invalid_argument("lateral.q_* weights must be finite and non-negative");
  if (!(steer_limit > 0.0) || steer_limit > kMaxSteer) throw std::invalid_argument("lateral.steer_limit must be in (0, pi/6]");
  if (!(centering_weight > 0.0)) throw std::invalid_argument("lateral.centering_weight must be positive");
  if (!(centering_sharpness > 0.0)) throw std::invalid_argument("lateral.centering_sharpness must be positive");
}

Vector LateralState::as_vector() const {
  Vector x(4);
  x << offset, offset_rate, heading, heading_rate;
  return x;
}

double steer_angle(double steer_cmd) {
  const double limit = std::nextafter(kMaxSteer, 0.0);
  return std::clamp(steer_cmd * kMaxSteer, -limit, limit);
}

SteerCommand SteerCommand::from_angle(double delta_rad) { return {delta_rad / kMaxSteer, delta_rad}; }

LateralModel build_lateral_dynamics(const VehicleParams& p, double v, double dt) {
  p.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("lateral dynamics: dt must be positive");
  LateralModel model;
  model.speed_clamped = !(v >= kMinModelSpeed);
  model.speed_used = model.speed_clamped ? kMinModelSpeed : v;
  v = model.speed_used;

  const double cf = p.c_alpha_front;
  const double cr = p.c_alpha_rear;
  const double lf = p.l_front;
  const double lr = p.l_rear;
  const double m = p.mass;
  const double iz = p.yaw_inertia;

  // Coefficients kept term-for-term with the discrete lateral error model,
  // including its yaw-rate row signs.
  Matrix A = Matrix::Zero(4, 4);
  A(0, 0) = 1.0;
  A(0, 1) = dt;
  A(1, 1) = 1.0 - 2.0 * (cf + cr) * dt / (m * v);
  A(1, 2) = 2.0 * (cf + cr) * dt / m;
  A(1, 3) = 2.0 * (-cf * lf + cr * lr) * dt / (m * v);
  A(2, 2) = 1.0;
  A(2, 3) = dt;
  A(3, 1) = 2.0 * (cf * lf - cr * lr) * dt / (iz * v);
  A(3, 2) = 2.0 * (cf * lf - cr * lr) * dt / iz;
  A(3, 3) = 1.0 - 2.0 * (cf * lf * lf - cr * lr * lr) * dt / (iz * v);

  Matrix B = Matrix::Zero(4, 1);
  B(1, 0) = 2.0 * cf * dt / m;
  B(3, 0) = 2.0 * cf * lf * dt / iz;

  model.dynamics = ilqr::AffineDynamics::linear(std::move(A), std::move(B));
  return model;
}

ilqr::ProblemSpec build_lateral_problem(const LateralState& state, const ilqr::AffineDynamics& dynamics,
                                        const LateralTuning& tuning) {
  if (tuning.horizon < 1) throw std::invalid_argument("lateral.horizon must be >= 1");
  ilqr::ProblemSpec spec;
  spec.dynamics = {dynamics};
  spec.horizon = tuning.horizon;
  spec.x0 = state.as_vector();
  spec.running.Q = tuning.Q;
  spec.running.R = Matrix::Constant(1, 1, tuning.R);
  spec.running.x_ref = Vector::Zero(4);
  spec.terminal.Q = tuning.Q;
  spec.terminal.R = Matrix::Zero(0, 0);
  spec.terminal.x_ref = Vector::Zero(4);

  if (tuning.steer_barrier) {
    spec.barriers.push_back(ilqr::BarrierTerm::log_range(ilqr::LinearSelector::control(4, 1, 0), -tuning.steer_limit,
                                                         tuning.steer_limit));
  }
  if (tuning.centering_barrier) {
    // exp(D_{i+1} - D_i) while left of center, exp(D_i - D_{i+1}) while right of it.
    const double direction = state.offset >= 0.0 ? 1.0 : -1.0;
    spec.barriers.push_back(ilqr::BarrierTerm::exp_lane_centering(ilqr::LinearSelector::state(4, 0, 1.0, 0.0, 1),
                                                                  direction, tuning.centering_weight,
                                                                  tuning.centering_sharpness));
  }
  return spec;
}

SteerPlan plan_steering(const LateralState& state, double v, const VehicleParams& params,
                        std::optional<std::span<const Vector>> warm_start, const LateralTuning& tuning,
                        const ilqr::SolverConfig& config) {
  const LateralModel model = build_lateral_dynamics(params, v, tuning.dt);
  const ilqr::ProblemSpec spec = build_lateral_problem(state, model.dynamics, tuning);
  if (warm_start && static_cast<int>(warm_start->size()) != spec.horizon) warm_start.reset();
  ilqr::SolveResult solved = ilqr::solve(spec, warm_start, config);

  SteerPlan plan;
  double delta = solved.trajectory.controls.front()[0];
  // The log barrier keeps delta interior; the clamp only matters when the
  // barrier is disabled for oracle comparisons.
  const double limit = std::nextafter(kMaxSteer, 0.0);
  delta = std::clamp(delta, -limit, limit);
  plan.command = SteerCommand::from_angle(delta);
  plan.controls = std::move(solved.trajectory.controls);
  plan.diagnostics = std::move(solved.diagnostics);
  plan.speed_clamped = model.speed_clamped;
  return plan;
}

std::vector<Vector> shift_controls(std::span<const Vector> controls) {
  std::vector<Vector> out;
  if (controls.empty()) return out;
  out.assign(controls.begin() + 1, controls.end());
  out.push_back(controls.back());
  return out;
}

}  // namespace vpc_cilqr::planning
