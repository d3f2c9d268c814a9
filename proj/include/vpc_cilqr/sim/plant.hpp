#pragma once

#include "vpc_cilqr/planning/lateral_planner.hpp"
#include "vpc_cilqr/sim/track.hpp"

namespace vpc_cilqr::sim {

/// Ground-truth vehicle state in road coordinates plus body-frame velocities.
struct PlantState {
  double s = 0.0;                 // arc position, unwrapped
  double offset = 0.0;            // lateral offset, positive left
  double heading = 0.0;           // heading error relative to the road tangent
  double speed = 0.0;             // longitudinal body speed
  double yaw_rate = 0.0;
  double lateral_velocity = 0.0;  // body-frame, positive left
  double accel = 0.0;             // longitudinal acceleration applied over the last step
};

struct PlantInput {
  double steer_rad = 0.0;
  double accel_cmd = 0.0;  // normalized [-1, 1]
  double brake_cmd = 0.0;  // normalized [0, 1]
};

struct PlantParams {
  planning::VehicleParams vehicle;
  double accel_scale = 5.0;   // m/s^2 per unit accel command
  double brake_scale = 8.0;   // m/s^2 per unit brake command
  double slip_speed_floor = 1.0;
  double off_track_offset = 10.0;
};

inline constexpr double kMaxPlantStep = 2e-3;

/// Longitudinal acceleration produced by the (clamped) commands.
double commanded_accel(const PlantInput& in, const PlantParams& p);

/// One fixed RK4 step of the dynamic bicycle with linear tires coupled to the
/// road-frame kinematics. Throws std::invalid_argument if dt is outside (0, 2 ms].
PlantState step_plant(const PlantState& state, const PlantInput& input, const TrackGeometry& track,
                      const PlantParams& params, double dt);

bool off_track(const PlantState& state, const PlantParams& params);

}  // namespace vpc_cilqr::sim
