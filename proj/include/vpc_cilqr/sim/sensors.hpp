#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>

#include "vpc_cilqr/lane/lane_geometry.hpp"
#include "vpc_cilqr/planning/longitudinal_planner.hpp"
#include "vpc_cilqr/sim/plant.hpp"
#include "vpc_cilqr/sim/track.hpp"

namespace vpc_cilqr::sim {

/// Simulation clock in integer microseconds.
using Micros = std::int64_t;

/// FIFO of payloads released once the clock reaches their ready time.
template <typename T>
class LatencyQueue {
 public:
  void push(Micros ready, T payload) {
    if (!entries_.empty() && ready < entries_.back().first)
      throw std::logic_error("LatencyQueue: ready times must be non-decreasing");
    entries_.emplace_back(ready, std::move(payload));
  }

  /// Earliest pending ready time, if any.
  std::optional<Micros> next_ready() const {
    if (entries_.empty()) return std::nullopt;
    return entries_.front().first;
  }

  /// Removes and returns the oldest entry whose ready time is <= now.
  std::optional<T> pop_ready(Micros now) {
    if (entries_.empty() || entries_.front().first > now) return std::nullopt;
    T out = std::move(entries_.front().second);
    entries_.pop_front();
    return out;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::deque<std::pair<Micros, T>> entries_;
};

struct NoiseLevels {
  double heading_sigma = 0.0;     // rad
  double offset_sigma = 0.0;      // m
  double lane_point_sigma = 0.0;  // m
};

struct Perception {
  Micros captured = 0;
  double heading = 0.0;
  double offset = 0.0;
  lane::LaneMap lane;
};

struct LaneSampling {
  double range = 30.0;
  double spacing = 1.0;
};

/// Synthetic stand-in for the camera pipeline: noisy pose plus BEV centerline
/// samples at fixed forward distances in the ego frame.
class PerceptionModel {
 public:
  PerceptionModel(NoiseLevels noise, std::uint64_t seed, LaneSampling sampling = {});

  Perception perceive(const PlantState& state, const TrackGeometry& track, Micros now);

 private:
  NoiseLevels noise_;
  LaneSampling sampling_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> unit_{0.0, 1.0};
};

/// Centerline samples y(x) at x = 0, spacing, ..., range in the ego frame (noise free).
lane::LaneMap sample_lane_map(const PlantState& state, const TrackGeometry& track, const LaneSampling& sampling);

/// Lead car on the centerline with speed mean + amplitude * sin(2 pi t / period).
struct LeadVehicle {
  double initial_s = 0.0;
  double mean_speed = 0.0;
  double amplitude = 0.0;
  double period = 20.0;

  double speed(double t) const;
  /// Closed-form integral of speed(t).
  double position(double t) const;
};

inline constexpr double kRadarRange = 160.0;

/// Exact along-track gap and lead speed; nullopt for leads behind the ego or out of range.
std::optional<planning::LeadMeasurement> radar_measure(const PlantState& ego, double lead_s, double lead_speed,
                                                       double range = kRadarRange);

}  // namespace vpc_cilqr::sim
