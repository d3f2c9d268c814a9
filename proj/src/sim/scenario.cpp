#include "vpc_cilqr/sim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <deque>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace vpc_cilqr::sim {
namespace {

constexpr double kMicro = 1e-6;

double seconds(Micros t) { return static_cast<double>(t) * kMicro; }

struct Command {
  double steer_cmd = 0.0;
  double accel_cmd = 0.0;
  double brake_cmd = 0.0;
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void append_event(std::string& pending, const char* what) {
  if (!pending.empty()) pending += ';';
  pending += what;
}

}  // namespace

const char* to_string(LateralMode mode) { return mode == LateralMode::Cilqr ? "cilqr" : "vpc-cilqr"; }

std::optional<LateralMode> parse_lateral_mode(const std::string& text) {
  if (text == "cilqr") return LateralMode::Cilqr;
  if (text == "vpc-cilqr") return LateralMode::VpcCilqr;
  return std::nullopt;
}

void LatencySettings::validate() const {
  if (plant_step <= 0 || plant_step > static_cast<Micros>(kMaxPlantStep * 1e6))
    throw std::invalid_argument("sim.plant_step_us must be in (0, 2000]");
  if (perception_period <= 0 || vpc_period <= 0 || control_period <= 0)
    throw std::invalid_argument("sim: module periods (*_period_us) must be positive");
  if (perception_latency < 0 || actuation_latency < 0) throw std::invalid_argument("sim: latencies (*_latency_us) must be >= 0");
}

void ScenarioSpec::validate() const {
  (void)TrackGeometry::preset(track);
  if (!(cruise_speed > 0.0)) throw std::invalid_argument("scenario.cruise_speed_kph must be positive");
  if (!std::isnan(initial_speed) && !(initial_speed > 0.0))
    throw std::invalid_argument("scenario.initial_speed_kph must be positive");
  if (duration <= 0.0 && !(laps > 0.0)) throw std::invalid_argument("scenario.laps must be positive when scenario.duration <= 0");
  if (lead.enabled) {
    if (!(lead.initial_gap > 0.0)) throw std::invalid_argument("scenario.lead_gap must be positive");
    if (!(lead.mean_speed - std::abs(lead.speed_amplitude) > 0.0)) throw std::invalid_argument("scenario.lead_speed_kph must exceed scenario.lead_amplitude_kph");
    if (!(lead.speed_period > 0.0)) throw std::invalid_argument("scenario.lead_period must be positive");
  }
  latency.validate();
  vehicle.validate();
  lateral.validate();
  following.validate();
  pi.validate();
  vpc.validate();
  solver.validate();
}

SimLog run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const TrackGeometry track = TrackGeometry::preset(spec.track);
  PlantParams plant = spec.plant;
  plant.vehicle = spec.vehicle;
  const LatencySettings& lat = spec.latency;

  PlantState truth;
  truth.s = spec.start_s;
  truth.offset = spec.initial_offset;
  truth.heading = spec.initial_heading;
  truth.speed = std::isnan(spec.initial_speed) ? spec.cruise_speed : spec.initial_speed;

  PerceptionModel perception(spec.noise, spec.seed);
  lane::VpcEstimator vpc(spec.vpc);
  planning::PiState pi = spec.pi;
  pi.v_ref = spec.cruise_speed;
  planning::LongitudinalController longitudinal(pi, spec.following, spec.solver);
  const LeadVehicle lead{spec.start_s + spec.lead.initial_gap, spec.lead.mean_speed, spec.lead.speed_amplitude,
                         spec.lead.speed_period};

  LatencyQueue<Perception> perception_queue;
  LatencyQueue<Command> actuation_queue;
  std::optional<Perception> latest;
  std::vector<ilqr::Vector> lateral_warm;
  std::deque<double> speed_history;
  double delta_shift = 0.0;
  double last_delta = 0.0;
  int last_iterations = 0;
  double last_solve_ms = 0.0;
  bool was_following = false;

  Command issued;
  PlantInput applied;

  SimLog log;
  log.track_length = track.length();
  log.track_max_curvature = track.max_abs_curvature();
  log.ref_gap = spec.following.ref_gap;
  log.follow_window_start = spec.follow_window_start;
  log.follow_window_end = spec.follow_window_end;

  const Micros end_time = spec.duration > 0.0 ? static_cast<Micros>(std::llround(spec.duration * 1e6)) : -1;
  const double end_s = spec.start_s + spec.laps * track.length();
  // Generous cap so a stalled vehicle cannot loop forever in lap mode.
  const Micros time_cap = spec.duration > 0.0
                              ? end_time
                              : static_cast<Micros>(std::llround(3.0 * spec.laps * track.length() / spec.cruise_speed * 1e6)) + 60'000'000;

  Micros t = 0;
  Micros next_perception = 0;
  Micros next_vpc = 0;
  Micros next_control = 0;
  std::string pending_event = "start";

  auto lead_gap_now = [&](Micros now) { return lead.position(seconds(now)) - truth.s; };

  while (true) {
    // Perception: capture, then deliver whatever has cleared the latency.
    if (t >= next_perception) {
      perception_queue.push(t + lat.perception_latency, perception.perceive(truth, track, t));
      next_perception += lat.perception_period;
    }
    while (auto delivered = perception_queue.pop_ready(t)) {
      vpc.push(delivered->lane);
      latest = std::move(*delivered);
    }

    if (t >= next_vpc) {
      if (spec.controller == LateralMode::VpcCilqr && vpc.size() > 0) delta_shift = vpc.evaluate(last_delta).delta_shift;
      next_vpc += lat.vpc_period;
    }

    if (t >= next_control) {
      const double control_dt = seconds(lat.control_period);
      if (latest) {
        const planning::LateralState lat_state{latest->offset, 0.0, latest->heading, 0.0};
        if (spec.capture_planner_inputs) log.lateral_inputs.push_back({lat_state, truth.speed});
        std::optional<std::span<const ilqr::Vector>> warm;
        if (!lateral_warm.empty()) warm = std::span<const ilqr::Vector>(lateral_warm);
        const auto start = std::chrono::steady_clock::now();
        planning::SteerPlan plan =
            planning::plan_steering(lat_state, truth.speed, spec.vehicle, warm, spec.lateral, spec.solver);
        last_solve_ms = elapsed_ms(start);
        log.lateral_solve_ms.push_back(last_solve_ms);
        last_iterations = plan.diagnostics.iterations;
        log.lateral_iterations.push_back(last_iterations);
        if (!plan.diagnostics.converged) ++log.nonconverged_solves;
        lateral_warm = planning::shift_controls(plan.controls);
        last_delta = plan.command.delta_rad;
        double steer = plan.command.steer_cmd;
        if (spec.controller == LateralMode::VpcCilqr) steer = lane::apply_vpc(steer, delta_shift);
        issued.steer_cmd = steer;
        log.emitted_steer_rad.push_back(planning::steer_angle(steer));
      }

      if (spec.longitudinal) {
        speed_history.push_back(truth.speed);
        while (speed_history.size() > 4) speed_history.pop_front();
        double accel_estimate = 0.0;
        if (speed_history.size() >= 2)
          accel_estimate = (speed_history.back() - speed_history.front()) /
                           (static_cast<double>(speed_history.size() - 1) * control_dt);
        std::optional<planning::LeadMeasurement> radar;
        if (spec.lead.enabled) radar = radar_measure(truth, lead.position(seconds(t)), lead.speed(seconds(t)));
        const auto start = std::chrono::steady_clock::now();
        planning::LongPlan plan = longitudinal.step(truth.speed, accel_estimate, radar, control_dt);
        if (plan.following) {
          log.longitudinal_solve_ms.push_back(elapsed_ms(start));
          if (spec.capture_planner_inputs)
            log.longitudinal_inputs.push_back({{radar->gap, truth.speed, accel_estimate}, *radar});
          for (const auto& j : plan.controls) log.planned_jerks.push_back(j[0]);
          if (plan.diagnostics && !plan.diagnostics->converged) ++log.nonconverged_solves;
        }
        if (plan.following != was_following) append_event(pending_event, plan.following ? "follow_on" : "follow_off");
        was_following = plan.following;
        issued.accel_cmd = plan.command.accel_cmd;
        issued.brake_cmd = plan.command.brake_cmd;
      }
      actuation_queue.push(t + lat.actuation_latency, issued);
      log.actuations.push_back({t, -1, issued.steer_cmd});
      next_control += lat.control_period;
    }

    while (auto cmd = actuation_queue.pop_ready(t)) {
      applied.steer_rad = planning::steer_angle(cmd->steer_cmd);
      applied.accel_cmd = cmd->accel_cmd;
      applied.brake_cmd = cmd->brake_cmd;
      for (auto& rec : log.actuations)
        if (rec.applied < 0) {
          rec.applied = t;
          break;
        }
    }

    if (t % lat.plant_step == 0) {
      SimRow row;
      row.time = t;
      row.truth = truth;
      row.curvature = track.curvature(truth.s);
      if (latest) {
        row.perceived_offset = latest->offset;
        row.perceived_heading = latest->heading;
      }
      row.steer_cmd = issued.steer_cmd;
      row.steer_applied = applied.steer_rad / planning::kMaxSteer;
      row.accel_cmd = issued.accel_cmd;
      row.brake_cmd = issued.brake_cmd;
      row.delta_shift = delta_shift;
      row.following = was_following;
      row.solver_iterations = last_iterations;
      row.solver_time_ms = spec.log_solver_time ? last_solve_ms : 0.0;
      if (spec.lead.enabled) {
        row.has_lead = true;
        row.gap = lead_gap_now(t);
        row.lead_speed = lead.speed(seconds(t));
      }

      std::string terminal;
      if (off_track(truth, plant)) terminal = "off_track";
      else if (spec.lead.enabled && row.gap <= 0.0) terminal = "collision";
      else if ((end_time >= 0 && t >= end_time) || (end_time < 0 && truth.s >= end_s)) terminal = "completed";
      else if (t >= time_cap) terminal = "timeout";
      if (!terminal.empty()) append_event(pending_event, terminal.c_str());
      row.event = std::move(pending_event);
      pending_event.clear();
      log.rows.push_back(std::move(row));
      if (!terminal.empty()) {
        log.terminal_event = terminal;
        break;
      }
    }

    Micros next = (t / lat.plant_step + 1) * lat.plant_step;
    next = std::min({next, next_perception, next_control});
    if (spec.controller == LateralMode::VpcCilqr) next = std::min(next, next_vpc);
    if (auto r = perception_queue.next_ready()) next = std::min(next, *r);
    if (auto r = actuation_queue.next_ready()) next = std::min(next, *r);
    truth = step_plant(truth, applied, track, plant, seconds(next - t));
    t = next;
  }
  // Commands still in flight when the run ended never reached the plant.
  std::erase_if(log.actuations, [](const ActuationRecord& r) { return r.applied < 0; });
  return log;
}

Metrics compute_metrics(const SimLog& log) {
  Metrics m;
  m.samples = log.rows.size();
  m.terminal_event = log.terminal_event;
  if (log.rows.empty()) return m;
  m.duration = seconds(log.rows.back().time - log.rows.front().time);
  m.distance = log.rows.back().truth.s - log.rows.front().truth.s;

  const double peak_threshold = 0.9 * log.track_max_curvature;
  const bool window_by_arc = !std::isnan(log.follow_window_start) && !std::isnan(log.follow_window_end);
  double heading_sum = 0.0;
  double offset_sum = 0.0;
  double speed_sum = 0.0;
  double gap_sum = 0.0;
  m.min_gap = std::numeric_limits<double>::infinity();
  for (const auto& r : log.rows) {
    const double abs_offset = std::abs(r.truth.offset);
    heading_sum += std::abs(r.truth.heading);
    offset_sum += abs_offset;
    if (abs_offset > m.max_abs_offset) {
      m.max_abs_offset = abs_offset;
      m.s_at_max_abs_offset = r.truth.s;
    }
    if (log.track_max_curvature > 0.0 && std::abs(r.curvature) >= peak_threshold)
      m.max_abs_offset_peak_curvature = std::max(m.max_abs_offset_peak_curvature, abs_offset);
    if (r.has_lead) m.min_gap = std::min(m.min_gap, r.gap);

    const bool in_window =
        r.has_lead && (window_by_arc ? (r.truth.s >= log.follow_window_start && r.truth.s <= log.follow_window_end)
                                     : r.following);
    if (in_window) {
      ++m.following_samples;
      speed_sum += std::abs(r.truth.speed - r.lead_speed);
      gap_sum += std::abs(r.gap - log.ref_gap);
    }
  }
  const auto n = static_cast<double>(log.rows.size());
  m.heading_mae = heading_sum / n;
  m.offset_mae = offset_sum / n;
  if (m.following_samples > 0) {
    m.speed_mae = speed_sum / static_cast<double>(m.following_samples);
    m.gap_mae = gap_sum / static_cast<double>(m.following_samples);
  }
  if (!std::isfinite(m.min_gap)) m.min_gap = 0.0;
  const auto& last = log.rows.back();
  if (last.has_lead) {
    m.final_gap = last.gap;
    m.final_speed_error = last.truth.speed - last.lead_speed;
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  auto max_of = [](const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); };
  m.lateral_solve_mean_ms = mean(log.lateral_solve_ms);
  m.lateral_solve_max_ms = max_of(log.lateral_solve_ms);
  m.longitudinal_solve_mean_ms = mean(log.longitudinal_solve_ms);
  m.longitudinal_solve_max_ms = max_of(log.longitudinal_solve_ms);
  double iters = 0.0;
  for (int it : log.lateral_iterations) iters += it;
  m.lateral_iterations_mean = log.lateral_iterations.empty() ? 0.0 : iters / static_cast<double>(log.lateral_iterations.size());
  m.nonconverged_solves = log.nonconverged_solves;
  return m;
}

namespace {

void put_fixed(std::string& line, double value, int precision) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, precision);
  line.append(buf, res.ptr);
}

}  // namespace

void write_csv(const SimLog& log, std::ostream& out) {
  out << kCsvHeader << '\n';
  std::string line;
  for (const auto& r : log.rows) {
    line.clear();
    put_fixed(line, seconds(r.time), 3);
    line += ',';
    put_fixed(line, r.truth.s, 6);
    line += ',';
    put_fixed(line, r.truth.offset, 6);
    line += ',';
    put_fixed(line, r.truth.heading, 6);
    line += ',';
    put_fixed(line, r.truth.speed, 6);
    line += ',';
    put_fixed(line, r.steer_cmd, 6);
    line += ',';
    put_fixed(line, r.accel_cmd, 6);
    line += ',';
    put_fixed(line, r.brake_cmd, 6);
    line += ',';
    if (r.has_lead) put_fixed(line, r.gap, 6);
    line += ',';
    if (r.has_lead) put_fixed(line, r.lead_speed, 6);
    line += ',';
    line += std::to_string(r.solver_iterations);
    line += ',';
    put_fixed(line, r.solver_time_ms, 4);
    line += ',';
    line += r.event;
    out << line << '\n';
  }
}

}  // namespace vpc_cilqr::sim
