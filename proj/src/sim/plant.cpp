#include "vpc_cilqr/sim/plant.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vpc_cilqr::sim {
namespace {

// s, offset, heading, speed, yaw_rate, lateral_velocity
using Deriv = std::array<double, 6>;

Deriv to_array(const PlantState& x) {
  return {x.s, x.offset, x.heading, x.speed, x.yaw_rate, x.lateral_velocity};
}

Deriv derivative(const Deriv& x, double steer, double accel, const TrackGeometry& track, const PlantParams& p) {
  const auto& v = p.vehicle;
  const double offset = x[1];
  const double heading = x[2];
  const double speed = x[3];
  const double r = x[4];
  const double vy = x[5];

  const double vx = std::max(speed, p.slip_speed_floor);
  const double alpha_f = steer - (vy + v.l_front * r) / vx;
  const double alpha_r = -(vy - v.l_rear * r) / vx;
  const double fy_f = 2.0 * v.c_alpha_front * alpha_f;
  const double fy_r = 2.0 * v.c_alpha_rear * alpha_r;
  const double cos_steer = std::cos(steer);

  const double kappa = track.curvature(x[0]);
  const double s_dot = (speed * std::cos(heading) - vy * std::sin(heading)) / (1.0 - kappa * offset);

  Deriv d{};
  d[0] = s_dot;
  d[1] = speed * std::sin(heading) + vy * std::cos(heading);
  d[2] = r - kappa * s_dot;
  d[3] = (speed <= 0.0 && accel < 0.0) ? 0.0 : accel;
  d[4] = (v.l_front * fy_f * cos_steer - v.l_rear * fy_r) / v.yaw_inertia;
  d[5] = (fy_f * cos_steer + fy_r) / v.mass - speed * r;
  return d;
}

Deriv axpy(const Deriv& x, double h, const Deriv& k) {
  Deriv out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + h * k[i];
  return out;
}

}  // namespace

double commanded_accel(const PlantInput& in, const PlantParams& p) {
  return p.accel_scale * std::clamp(in.accel_cmd, -1.0, 1.0) - p.brake_scale * std::clamp(in.brake_cmd, 0.0, 1.0);
}

PlantState step_plant(const PlantState& state, const PlantInput& input, const TrackGeometry& track,
                      const PlantParams& params, double dt) {
  if (!(dt > 0.0) || dt > kMaxPlantStep + 1e-15) throw std::invalid_argument("step_plant: dt must be in (0, 2 ms]");
  const double accel = commanded_accel(input, params);
  const Deriv x = to_array(state);
  const Deriv k1 = derivative(x, input.steer_rad, accel, track, params);
  const Deriv k2 = derivative(axpy(x, 0.5 * dt, k1), input.steer_rad, accel, track, params);
  const Deriv k3 = derivative(axpy(x, 0.5 * dt, k2), input.steer_rad, accel, track, params);
  const Deriv k4 = derivative(axpy(x, dt, k3), input.steer_rad, accel, track, params);
  Deriv next;
  for (std::size_t i = 0; i < x.size(); ++i) next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  PlantState out;
  out.s = next[0];
  out.offset = next[1];
  out.heading = std::remainder(next[2], 2.0 * std::numbers::pi);
  out.speed = std::max(next[3], 0.0);
  out.yaw_rate = next[4];
  out.lateral_velocity = next[5];
  out.accel = (out.speed - state.speed) / dt;
  return out;
}

bool off_track(const PlantState& state, const PlantParams& params) {
  return !(std::abs(state.offset) < params.off_track_offset);
}

}  // namespace vpc_cilqr::sim
