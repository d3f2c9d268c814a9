#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vpc_cilqr/ilqr/solver.hpp"

namespace vpc_cilqr::planning {

struct LongitudinalState {
  double gap = 0.0;    // m, distance to the lead vehicle
  double speed = 0.0;  // m/s
  double accel = 0.0;  // m/s^2

  ilqr::Vector as_vector() const;
};

struct LeadMeasurement {
  double gap = 0.0;    // m
  double speed = 0.0;  // m/s
  double accel = 0.0;  // m/s^2, taken as zero by the radar model
};

/// Cruise PI controller. The tracking error is v_ref - v so positive gains
/// accelerate a slow vehicle; the integral is the time integral of that error.
struct PiState {
  double k_p = 0.5;
  double k_i = 0.05;
  double integral = 0.0;
  double integral_limit = 2.0;
  double v_ref = 76.0 / 3.6;

  void validate() const;
};

struct LongCommand {
  double accel_cmd = 0.0;  // normalized [-1, 1]
  double brake_cmd = 0.0;  // normalized [0, 1]
};

/// tanh(k_p e + k_i sum(e dt)); advances and clamps the integral by dt.
double pi_cruise(PiState& pi, double v, double dt);

/// Inter-vehicle model with state (gap, speed, accel), jerk input and the lead's
/// (speed, accel) as measurable disturbance.
ilqr::AffineDynamics build_longitudinal_dynamics(double dt, double lead_speed = 0.0, double lead_accel = 0.0);

struct LongitudinalTuning {
  int horizon = 30;
  double dt = 0.1;
  ilqr::Matrix Q = Eigen::Vector3d(20.0, 20.0, 1.0).asDiagonal().toDenseMatrix();
  double R = 1.0;
  double ref_gap = 11.0;
  double jerk_limit = 1.0;
  double accel_min = -5.0;
  double accel_max = 5.0;
  double critical_gap = 5.5;
  double brake_full_gap = 2.0;
  double engage_range = 120.0;
  double release_range = 140.0;
  bool jerk_barrier = true;
  bool gap_barrier = true;
  bool accel_barrier = true;

  void validate() const;
};

ilqr::ProblemSpec build_following_problem(const LongitudinalState& state, const LeadMeasurement& lead,
                                          const LongitudinalTuning& tuning = {});

/// Linear brake ramp: 0 at or above the critical gap, 1 at or below the full-brake gap.
double brake_ramp(double gap, const LongitudinalTuning& tuning);

struct LongPlan {
  LongCommand command;
  bool following = false;
  double jerk = 0.0;
  std::vector<ilqr::Vector> controls;
  std::optional<ilqr::SolverDiagnostics> diagnostics;
};

/// One control cycle. Without a lead this is pure cruise PI; with a lead the
/// PI tracks the lead speed and the first optimal jerk is added on top.
LongPlan plan_longitudinal(const LongitudinalState& state, const std::optional<LeadMeasurement>& lead, PiState& pi,
                           double control_dt, std::optional<std::span<const ilqr::Vector>> warm_start,
                           const LongitudinalTuning& tuning = {}, const ilqr::SolverConfig& config = {});

/// Owns the PI state, warm start and the lead engage/release hysteresis.
class LongitudinalController {
 public:
  LongitudinalController(PiState pi, LongitudinalTuning tuning, ilqr::SolverConfig config = {});

  /// `lead` is whatever the radar reports this cycle (already range gated).
  LongPlan step(double speed, double accel_estimate, const std::optional<LeadMeasurement>& lead, double control_dt);

  bool following() const { return following_; }
  const PiState& pi() const { return pi_; }

 private:
  PiState pi_;
  LongitudinalTuning tuning_;
  ilqr::SolverConfig config_;
  bool following_ = false;
  std::vector<ilqr::Vector> warm_;
};

}  // namespace vpc_cilqr::planning
