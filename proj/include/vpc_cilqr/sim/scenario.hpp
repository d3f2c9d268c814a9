#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vpc_cilqr/lane/lane_geometry.hpp"
#include "vpc_cilqr/planning/lateral_planner.hpp"
#include "vpc_cilqr/planning/longitudinal_planner.hpp"
#include "vpc_cilqr/sim/plant.hpp"
#include "vpc_cilqr/sim/sensors.hpp"
#include "vpc_cilqr/sim/track.hpp"

namespace vpc_cilqr::sim {

enum class LateralMode { Cilqr, VpcCilqr };

const char* to_string(LateralMode mode);
std::optional<LateralMode> parse_lateral_mode(const std::string& text);

struct LatencySettings {
  Micros plant_step = 1000;
  Micros perception_period = 24520;
  Micros perception_latency = 24520;
  Micros vpc_period = 15560;
  Micros control_period = 6660;
  Micros actuation_latency = 6660;

  void validate() const;
};

struct LeadSettings {
  bool enabled = false;
  double initial_gap = 30.0;
  double mean_speed = 63.5 / 3.6;
  double speed_amplitude = 0.5 / 3.6;
  double speed_period = 20.0;
};

struct ScenarioSpec {
  std::string track = "straight";
  double start_s = 0.0;
  double initial_offset = 0.0;
  double initial_heading = 0.0;
  double cruise_speed = 76.0 / 3.6;
  /// Initial speed; NaN means "start at cruise speed".
  double initial_speed = std::numeric_limits<double>::quiet_NaN();
  /// Simulated time limit; <= 0 means run `laps` laps instead.
  double duration = 0.0;
  double laps = 1.0;
  std::uint64_t seed = 1;

  LateralMode controller = LateralMode::VpcCilqr;
  bool longitudinal = true;
  LeadSettings lead;
  NoiseLevels noise;
  LatencySettings latency;

  planning::VehicleParams vehicle;
  planning::LateralTuning lateral;
  planning::LongitudinalTuning following;
  planning::PiState pi;
  lane::VpcConfig vpc;
  ilqr::SolverConfig solver;
  PlantParams plant;

  /// Arc-length window for longitudinal metrics; NaN bounds fall back to the
  /// rows where car-following is active.
  double follow_window_start = std::numeric_limits<double>::quiet_NaN();
  double follow_window_end = std::numeric_limits<double>::quiet_NaN();
  /// Record wall-clock solver times in the CSV (breaks byte-identical logs).
  bool log_solver_time = false;
  /// Keep the planner inputs of every control cycle (for benchmarking).
  bool capture_planner_inputs = false;

  void validate() const;
};

struct SimRow {
  Micros time = 0;
  PlantState truth;
  double curvature = 0.0;
  double perceived_offset = 0.0;
  double perceived_heading = 0.0;
  double steer_cmd = 0.0;      // latest issued normalized steering
  double steer_applied = 0.0;  // normalized steering acting on the plant
  double accel_cmd = 0.0;
  double brake_cmd = 0.0;
  double delta_shift = 0.0;
  bool has_lead = false;
  double gap = 0.0;
  double lead_speed = 0.0;
  bool following = false;
  int solver_iterations = 0;
  double solver_time_ms = 0.0;
  std::string event;
};

struct ActuationRecord {
  Micros issued = 0;
  Micros applied = 0;
  double steer_cmd = 0.0;
};

struct LateralSample {
  planning::LateralState state;
  double speed = 0.0;
};

struct LongitudinalSample {
  planning::LongitudinalState state;
  planning::LeadMeasurement lead;
};

struct SimLog {
  std::vector<SimRow> rows;
  std::vector<ActuationRecord> actuations;
  /// Every emitted steering angle (after VPC) and every planned jerk.
  std::vector<double> emitted_steer_rad;
  std::vector<double> planned_jerks;
  std::vector<double> lateral_solve_ms;
  std::vector<double> longitudinal_solve_ms;
  std::vector<int> lateral_iterations;
  int nonconverged_solves = 0;
  std::vector<LateralSample> lateral_inputs;
  std::vector<LongitudinalSample> longitudinal_inputs;
  double track_length = 0.0;
  double track_max_curvature = 0.0;
  double ref_gap = 11.0;
  double follow_window_start = std::numeric_limits<double>::quiet_NaN();
  double follow_window_end = std::numeric_limits<double>::quiet_NaN();
  std::string terminal_event;  // "completed", "off_track" or "collision"
};

/// Deterministic multi-rate closed loop. Simultaneous events run in the order
/// perception, VPC, planners, actuation, plant.
SimLog run_scenario(const ScenarioSpec& spec);

struct Metrics {
  std::size_t samples = 0;
  double duration = 0.0;
  double distance = 0.0;
  std::string terminal_event;
  double heading_mae = 0.0;
  double offset_mae = 0.0;
  double max_abs_offset = 0.0;
  double s_at_max_abs_offset = 0.0;
  /// Max |offset| over rows where |curvature| >= 0.9 of the track maximum.
  double max_abs_offset_peak_curvature = 0.0;
  std::size_t following_samples = 0;
  double speed_mae = 0.0;
  double gap_mae = 0.0;
  double final_gap = 0.0;
  double final_speed_error = 0.0;
  double min_gap = 0.0;
  double lateral_solve_mean_ms = 0.0;
  double lateral_solve_max_ms = 0.0;
  double longitudinal_solve_mean_ms = 0.0;
  double longitudinal_solve_max_ms = 0.0;
  double lateral_iterations_mean = 0.0;
  int nonconverged_solves = 0;
};

Metrics compute_metrics(const SimLog& log);

/// Fixed column order, header row, '.' decimal point, no locale dependence.
void write_csv(const SimLog& log, std::ostream& out);

inline constexpr const char* kCsvHeader =
    "time_s,s_m,delta_m,theta_rad,v_mps,steer_cmd,accel_cmd,brake_cmd,D_m,v_l_mps,solver_iters,solver_time_ms,event";

}  // namespace vpc_cilqr::sim
