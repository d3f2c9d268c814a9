#pragma once

#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "vpc_cilqr/ilqr/solver.hpp"

namespace vpc_cilqr::planning {

/// Road-wheel steering bound; the normalized command is delta / kMaxSteer.
inline constexpr double kMaxSteer = std::numbers::pi / 6.0;

struct VehicleParams {
  double mass = 1150.0;          // kg
  double c_alpha_front = 80000.0;  // N/rad
  double c_alpha_rear = 80000.0;   // N/rad
  double l_front = 1.27;         // m
  double l_rear = 1.37;          // m
  double yaw_inertia = 2000.0;   // kg m^2

  double wheelbase() const { return l_front + l_rear; }
  void validate() const;
};

/// Lateral error state in the road frame. Positive offset means the vehicle is
/// left of the centerline; positive heading error is a counter-clockwise rotation
/// from the road tangent.
struct LateralState {
  double offset = 0.0;
  double offset_rate = 0.0;
  double heading = 0.0;
  double heading_rate = 0.0;

  ilqr::Vector as_vector() const;
};

/// Road-wheel angle for a normalized command, kept strictly inside (-kMaxSteer, kMaxSteer).
double steer_angle(double steer_cmd);

struct SteerCommand {
  double steer_cmd = 0.0;  // normalized, positive = left
  double delta_rad = 0.0;

  static SteerCommand from_angle(double delta_rad);
};

struct LateralModel {
  ilqr::AffineDynamics dynamics;
  double speed_used = 0.0;
  bool speed_clamped = false;
};

inline constexpr double kMinModelSpeed = 1.0;

/// Discrete error dynamics of the lateral bicycle model at speed `v`.
/// Speeds below kMinModelSpeed are clamped and reported.
LateralModel build_lateral_dynamics(const VehicleParams& params, double v, double dt);

struct LateralTuning {
  int horizon = 30;
  double dt = 0.05;
  ilqr::Matrix Q = Eigen::Vector4d(20.0, 1.0, 20.0, 1.0).asDiagonal().toDenseMatrix();
  double R = 1.0;
  double steer_limit = kMaxSteer;
  /// Scale q1 and sharpness q2 of the consecutive-offset centering barrier.
  double centering_weight = 1.0;
  double centering_sharpness = 1.0;
  bool steer_barrier = true;
  bool centering_barrier = true;

  void validate() const;
};

ilqr::ProblemSpec build_lateral_problem(const LateralState& state, const ilqr::AffineDynamics& dynamics,
                                        const LateralTuning& tuning = {});

struct SteerPlan {
  SteerCommand command;
  std::vector<ilqr::Vector> controls;
  ilqr::SolverDiagnostics diagnostics;
  bool speed_clamped = false;
};

SteerPlan plan_steering(const LateralState& state, double v, const VehicleParams& params,
                        std::optional<std::span<const ilqr::Vector>> warm_start,
                        const LateralTuning& tuning = {}, const ilqr::SolverConfig& config = {});

/// Receding-horizon warm start: drop the first control and repeat the last.
std::vector<ilqr::Vector> shift_controls(std::span<const ilqr::Vector> controls);

}  // namespace vpc_cilqr::planning
