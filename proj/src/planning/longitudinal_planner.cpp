#include "vpc_cilqr/planning/longitudinal_planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vpc_cilqr/planning/lateral_planner.hpp"

namespace vpc_cilqr::planning {

using ilqr::BarrierTerm;
using ilqr::LinearSelector;
using ilqr::Matrix;
using ilqr::StageMask;
using ilqr::Vector;

Vector LongitudinalState::as_vector() const {
  Vector x(3);
  x << gap, speed, accel;
  return x;
}

void PiState::validate() const {
  if (!std::isfinite(k_p) || !std::isfinite(k_i)) throw std::invalid_argument("longitudinal.kp and longitudinal.ki must be finite");
  if (!(integral_limit >= 0.0)) throw std::invalid_argument("longitudinal.integral_limit must be >= 0");
}

double pi_cruise(PiState& pi, double v, double dt) {
  const double error = pi.v_ref - v;
  pi.integral = std::clamp(pi.integral + error * dt, -pi.integral_limit, pi.integral_limit);
  return std::tanh(pi.k_p * error + pi.k_i * pi.integral);
}

ilqr::AffineDynamics build_longitudinal_dynamics(double dt, double lead_speed, double lead_accel) {
  if (!(dt > 0.0)) throw std::invalid_argument("longitudinal dynamics: dt must be positive");
  ilqr::AffineDynamics d;
  d.A.resize(3, 3);
  d.A << 1.0, -dt, -0.5 * dt * dt,
         0.0, 1.0, dt,
         0.0, 0.0, 1.0;
  d.B.resize(3, 1);
  d.B << 0.0, 0.0, dt;
  d.C.resize(3, 3);
  d.C << 0.0, dt, 0.5 * dt * dt,
         0.0, 0.0, 0.0,
         0.0, 0.0, 0.0;
  d.w.resize(3);
  d.w << 0.0, lead_speed, lead_accel;
  return d;
}

void LongitudinalTuning::validate() const {
  if (horizon < 1) throw std::invalid_argument("longitudinal.horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("longitudinal.dt must be positive");
  if (!(R > 0.0)) throw std::invalid_argument("longitudinal.r_jerk must be positive");
  if (!(ref_gap > 0.0)) throw std::invalid_argument("longitudinal.ref_gap must be positive");
  if (!(jerk_limit > 0.0)) throw std::invalid_argument("longitudinal.jerk_limit must be positive");
  if (!(accel_min < accel_max)) throw std::invalid_argument("longitudinal.accel_min must be below accel_max");
  if (!(brake_full_gap < critical_gap)) throw std::invalid_argument("longitudinal.brake_full_gap must be below critical_gap");
  if (!(engage_range <= release_range)) throw std::invalid_argument("longitudinal.engage_range must not exceed release_range");
}

ilqr::ProblemSpec build_following_problem(const LongitudinalState& state, const LeadMeasurement& lead,
                                          const LongitudinalTuning& tuning) {
  tuning.validate();
  ilqr::ProblemSpec spec;
  spec.dynamics = {build_longitudinal_dynamics(tuning.dt, lead.speed, lead.accel)};
  spec.horizon = tuning.horizon;
  spec.x0 = state.as_vector();
  Vector ref(3);
  ref << tuning.ref_gap, lead.speed, lead.accel;
  spec.running = {tuning.Q, Matrix::Constant(1, 1, tuning.R), ref};
  spec.terminal = {tuning.Q, Matrix::Zero(0, 0), ref};

  if (tuning.jerk_barrier)
    spec.barriers.push_back(
        BarrierTerm::log_range(LinearSelector::control(3, 1, 0), -tuning.jerk_limit, tuning.jerk_limit));
  if (tuning.gap_barrier)  // exp(D_r - D)
    spec.barriers.push_back(
        BarrierTerm::exp_one_sided(LinearSelector::state(3, 0, -1.0, tuning.ref_gap, 1), 1.0, 1.0, StageMask::Both));
  if (tuning.accel_barrier) {  // exp(a_min - a) + exp(a - a_max)
    spec.barriers.push_back(
        BarrierTerm::exp_one_sided(LinearSelector::state(3, 2, -1.0, tuning.accel_min, 1), 1.0, 1.0, StageMask::Both));
    spec.barriers.push_back(
        BarrierTerm::exp_one_sided(LinearSelector::state(3, 2, 1.0, -tuning.accel_max, 1), 1.0, 1.0, StageMask::Both));
  }
  return spec;
}

double brake_ramp(double gap, const LongitudinalTuning& tuning) {
  if (!(gap < tuning.critical_gap)) return 0.0;
  const double ramp = (tuning.critical_gap - gap) / (tuning.critical_gap - tuning.brake_full_gap);
  return std::clamp(ramp, 0.0, 1.0);
}

LongPlan plan_longitudinal(const LongitudinalState& state, const std::optional<LeadMeasurement>& lead, PiState& pi,
                           double control_dt, std::optional<std::span<const Vector>> warm_start,
                           const LongitudinalTuning& tuning, const ilqr::SolverConfig& config) {
  pi.validate();
  LongPlan plan;
  if (!lead) {
    plan.command.accel_cmd = pi_cruise(pi, state.speed, control_dt);
    return plan;
  }

  plan.following = true;
  // While following, the PI regulates toward the lead speed with its integral
  // held, so the gap equilibrium is set by the planned jerk alone.
  const double pi_term = std::tanh(pi.k_p * (lead->speed - state.speed));

  LongitudinalState planned = state;
  planned.gap = lead->gap;
  const ilqr::ProblemSpec spec = build_following_problem(planned, *lead, tuning);
  if (warm_start && static_cast<int>(warm_start->size()) != spec.horizon) warm_start.reset();
  ilqr::SolveResult solved = ilqr::solve(spec, warm_start, config);

  const double limit = std::nextafter(tuning.jerk_limit, 0.0);
  plan.jerk = std::clamp(solved.trajectory.controls.front()[0], -limit, limit);
  plan.command.accel_cmd = std::clamp(pi_term + plan.jerk, -1.0, 1.0);
  plan.command.brake_cmd = brake_ramp(lead->gap, tuning);
  plan.controls = std::move(solved.trajectory.controls);
  plan.diagnostics = std::move(solved.diagnostics);
  return plan;
}

LongitudinalController::LongitudinalController(PiState pi, LongitudinalTuning tuning, ilqr::SolverConfig config)
    : pi_(pi), tuning_(std::move(tuning)), config_(config) {
  pi_.validate();
  tuning_.validate();
  config_.validate();
}

LongPlan LongitudinalController::step(double speed, double accel_estimate, const std::optional<LeadMeasurement>& lead,
                                      double control_dt) {
  if (lead) {
    if (!following_ && lead->gap <= tuning_.engage_range) following_ = true;
    if (following_ && lead->gap > tuning_.release_range) following_ = false;
  } else {
    following_ = false;
  }
  if (!following_) warm_.clear();

  LongitudinalState state{lead ? lead->gap : 0.0, speed, accel_estimate};
  std::optional<std::span<const Vector>> warm;
  if (!warm_.empty()) warm = std::span<const Vector>(warm_);
  LongPlan plan = plan_longitudinal(state, following_ ? lead : std::nullopt, pi_, control_dt, warm, tuning_, config_);
  if (plan.following) warm_ = shift_controls(plan.controls);
  return plan;
}

}  // namespace vpc_cilqr::planning
