#include "vpc_cilqr/sim/sensors.hpp"

#include <cmath>
#include <numbers>

namespace vpc_cilqr::sim {

PerceptionModel::PerceptionModel(NoiseLevels noise, std::uint64_t seed, LaneSampling sampling)
    : noise_(noise), sampling_(sampling), rng_(seed) {
  if (noise.heading_sigma < 0.0 || noise.offset_sigma < 0.0 || noise.lane_point_sigma < 0.0)
    throw std::invalid_argument("perception: noise levels must be non-negative");
  if (!(sampling.range > 0.0) || !(sampling.spacing > 0.0))
    throw std::invalid_argument("perception: lane sampling range and spacing must be positive");
}

lane::LaneMap sample_lane_map(const PlantState& state, const TrackGeometry& track, const LaneSampling& sampling) {
  const Pose2 ego = track.to_global({state.s, state.offset, state.heading});
  const double hx = std::cos(ego.heading);
  const double hy = std::sin(ego.heading);
  lane::LaneMap map;
  const int count = static_cast<int>(std::floor(sampling.range / sampling.spacing + 1e-9)) + 1;
  map.points.reserve(static_cast<std::size_t>(count));
  double s = state.s - state.offset * std::sin(state.heading);
  for (int i = 0; i < count; ++i) {
    const double x_target = i * sampling.spacing;
    // Newton on the centerline arc position whose forward ego coordinate is x_target.
    for (int iter = 0; iter < 20; ++iter) {
      const Pose2 c = track.centerline(s);
      const double forward = (c.x - ego.x) * hx + (c.y - ego.y) * hy;
      const double rate = std::cos(c.heading - ego.heading);
      const double step = (forward - x_target) / (std::abs(rate) > 0.1 ? rate : 0.1);
      s -= step;
      if (std::abs(step) < 1e-10) break;
    }
    const Pose2 c = track.centerline(s);
    map.points.push_back({x_target, -(c.x - ego.x) * hy + (c.y - ego.y) * hx});
  }
  return map;
}

Perception PerceptionModel::perceive(const PlantState& state, const TrackGeometry& track, Micros now) {
  Perception p;
  p.captured = now;
  p.heading = state.heading + noise_.heading_sigma * unit_(rng_);
  p.offset = state.offset + noise_.offset_sigma * unit_(rng_);
  p.lane = sample_lane_map(state, track, sampling_);
  p.lane.timestamp = static_cast<double>(now) * 1e-6;
  if (noise_.lane_point_sigma > 0.0)
    for (auto& pt : p.lane.points) pt.y += noise_.lane_point_sigma * unit_(rng_);
  return p;
}

double LeadVehicle::speed(double t) const {
  return mean_speed + amplitude * std::sin(2.0 * std::numbers::pi * t / period);
}

double LeadVehicle::position(double t) const {
  const double omega = 2.0 * std::numbers::pi / period;
  return initial_s + mean_speed * t + amplitude / omega * (1.0 - std::cos(omega * t));
}

std::optional<planning::LeadMeasurement> radar_measure(const PlantState& ego, double lead_s, double lead_speed,
                                                       double range) {
  const double gap = lead_s - ego.s;
  if (!(gap > 0.0) || gap > range) return std::nullopt;
  return planning::LeadMeasurement{gap, lead_speed, 0.0};
}

}  // namespace vpc_cilqr::sim
