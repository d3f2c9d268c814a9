#include "vpc_cilqr/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace vpc_cilqr::app {
namespace {

using sim::ScenarioSpec;

constexpr double kKph = 1.0 / 3.6;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  // Shortest representation that reads back to the same double.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct Binding {
  std::function<void(ScenarioSpec&, const std::string&)> set;  // throws std::string on bad value
  std::function<std::string(const ScenarioSpec&)> get;
};

using Table = std::map<std::string, Binding, std::less<>>;

template <typename Access>
Binding real(Access access, double scale = 1.0) {
  return {[=](ScenarioSpec& s, const std::string& v) {
            double x = 0.0;
            if (v == "nan") x = std::nan("");
            else if (!parse_number(v, x) || !std::isfinite(x)) throw std::string("expected a number");
            access(s) = x * scale;
          },
          [=](const ScenarioSpec& s) { return format_double(access(const_cast<ScenarioSpec&>(s)) / scale); }};
}

template <typename Access>
Binding integer(Access access) {
  return {[=](ScenarioSpec& s, const std::string& v) {
            using T = std::remove_reference_t<decltype(access(s))>;
            T x{};
            if (!parse_number(v, x)) throw std::string("expected an integer");
            access(s) = x;
          },
          [=](const ScenarioSpec& s) { return std::to_string(access(const_cast<ScenarioSpec&>(s))); }};
}

template <typename Access>
Binding boolean(Access access) {
  return {[=](ScenarioSpec& s, const std::string& v) {
            if (v == "true" || v == "on" || v == "1") access(s) = true;
            else if (v == "false" || v == "off" || v == "0") access(s) = false;
            else throw std::string("expected true/false");
          },
          [=](const ScenarioSpec& s) { return std::string(access(const_cast<ScenarioSpec&>(s)) ? "true" : "false"); }};
}

template <int Row>
Binding lateral_weight() {
  return real([](ScenarioSpec& s) -> double& { return s.lateral.Q(Row, Row); });
}

template <int Row>
Binding longitudinal_weight() {
  return real([](ScenarioSpec& s) -> double& { return s.following.Q(Row, Row); });
}

#define FIELD(expr) [](ScenarioSpec& s) -> auto& { return s.expr; }

const Table& table() {
  static const Table t = [] {
    Table t;
    t["scenario.track"] = {[](ScenarioSpec& s, const std::string& v) {
                             if (v.empty()) throw std::string("expected a track preset name");
                             s.track = v;
                           },
                           [](const ScenarioSpec& s) { return s.track; }};
    t["scenario.controller"] = {[](ScenarioSpec& s, const std::string& v) {
                                  auto mode = sim::parse_lateral_mode(v);
                                  if (!mode) throw std::string("expected cilqr or vpc-cilqr");
                                  s.controller = *mode;
                                },
                                [](const ScenarioSpec& s) { return std::string(sim::to_string(s.controller)); }};
    t["scenario.longitudinal"] = boolean(FIELD(longitudinal));
    t["scenario.start_s"] = real(FIELD(start_s));
    t["scenario.initial_offset"] = real(FIELD(initial_offset));
    t["scenario.initial_heading"] = real(FIELD(initial_heading));
    t["scenario.cruise_speed_kph"] = real(FIELD(cruise_speed), kKph);
    t["scenario.initial_speed_kph"] = real(FIELD(initial_speed), kKph);
    t["scenario.duration"] = real(FIELD(duration));
    t["scenario.laps"] = real(FIELD(laps));
    t["scenario.seed"] = integer(FIELD(seed));
    t["scenario.lead"] = boolean(FIELD(lead.enabled));
    t["scenario.lead_gap"] = real(FIELD(lead.initial_gap));
    t["scenario.lead_speed_kph"] = real(FIELD(lead.mean_speed), kKph);
    t["scenario.lead_amplitude_kph"] = real(FIELD(lead.speed_amplitude), kKph);
    t["scenario.lead_period"] = real(FIELD(lead.speed_period));
    t["scenario.follow_window_start"] = real(FIELD(follow_window_start));
    t["scenario.follow_window_end"] = real(FIELD(follow_window_end));

    t["sim.noise_heading"] = real(FIELD(noise.heading_sigma));
    t["sim.noise_offset"] = real(FIELD(noise.offset_sigma));
    t["sim.noise_lane_point"] = real(FIELD(noise.lane_point_sigma));
    t["sim.plant_step_us"] = integer(FIELD(latency.plant_step));
    t["sim.perception_period_us"] = integer(FIELD(latency.perception_period));
    t["sim.perception_latency_us"] = integer(FIELD(latency.perception_latency));
    t["sim.vpc_period_us"] = integer(FIELD(latency.vpc_period));
    t["sim.control_period_us"] = integer(FIELD(latency.control_period));
    t["sim.actuation_latency_us"] = integer(FIELD(latency.actuation_latency));
    t["sim.accel_scale"] = real(FIELD(plant.accel_scale));
    t["sim.brake_scale"] = real(FIELD(plant.brake_scale));
    t["sim.off_track_offset"] = real(FIELD(plant.off_track_offset));
    t["sim.log_solver_time"] = boolean(FIELD(log_solver_time));

    t["vehicle.mass"] = real(FIELD(vehicle.mass));
    t["vehicle.c_alpha_front"] = real(FIELD(vehicle.c_alpha_front));
    t["vehicle.c_alpha_rear"] = real(FIELD(vehicle.c_alpha_rear));
    t["vehicle.l_front"] = real(FIELD(vehicle.l_front));
    t["vehicle.l_rear"] = real(FIELD(vehicle.l_rear));
    t["vehicle.yaw_inertia"] = real(FIELD(vehicle.yaw_inertia));

    t["lateral.horizon"] = integer(FIELD(lateral.horizon));
    t["lateral.dt"] = real(FIELD(lateral.dt));
    t["lateral.q_offset"] = lateral_weight<0>();
    t["lateral.q_offset_rate"] = lateral_weight<1>();
    t["lateral.q_heading"] = lateral_weight<2>();
    t["lateral.q_heading_rate"] = lateral_weight<3>();
    t["lateral.r_steer"] = real(FIELD(lateral.R));
    t["lateral.steer_limit"] = real(FIELD(lateral.steer_limit));
    t["lateral.centering_weight"] = real(FIELD(lateral.centering_weight));
    t["lateral.centering_sharpness"] = real(FIELD(lateral.centering_sharpness));
    t["lateral.steer_barrier"] = boolean(FIELD(lateral.steer_barrier));
    t["lateral.centering_barrier"] = boolean(FIELD(lateral.centering_barrier));

    t["longitudinal.horizon"] = integer(FIELD(following.horizon));
    t["longitudinal.dt"] = real(FIELD(following.dt));
    t["longitudinal.q_gap"] = longitudinal_weight<0>();
    t["longitudinal.q_speed"] = longitudinal_weight<1>();
    t["longitudinal.q_accel"] = longitudinal_weight<2>();
    t["longitudinal.r_jerk"] = real(FIELD(following.R));
    t["longitudinal.ref_gap"] = real(FIELD(following.ref_gap));
    t["longitudinal.jerk_limit"] = real(FIELD(following.jerk_limit));
    t["longitudinal.accel_min"] = real(FIELD(following.accel_min));
    t["longitudinal.accel_max"] = real(FIELD(following.accel_max));
    t["longitudinal.critical_gap"] = real(FIELD(following.critical_gap));
    t["longitudinal.brake_full_gap"] = real(FIELD(following.brake_full_gap));
    t["longitudinal.engage_range"] = real(FIELD(following.engage_range));
    t["longitudinal.release_range"] = real(FIELD(following.release_range));
    t["longitudinal.kp"] = real(FIELD(pi.k_p));
    t["longitudinal.ki"] = real(FIELD(pi.k_i));
    t["longitudinal.integral_limit"] = real(FIELD(pi.integral_limit));

    t["vpc.lookahead"] = real(FIELD(vpc.lookahead));
    t["vpc.gain"] = real(FIELD(vpc.gain));
    t["vpc.frame_window"] = integer(FIELD(vpc.frame_window));
    t["vpc.bin_width"] = real(FIELD(vpc.bin_width));
    t["vpc.max_residual_rms"] = real(FIELD(vpc.max_residual_rms));
    t["vpc.min_points"] = integer(FIELD(vpc.min_points));
    t["vpc.min_span"] = real(FIELD(vpc.min_span));
    return t;
  }();
  return t;
}

#undef FIELD

std::string location(const std::string& source, int line) {
  return line > 0 ? source + ":" + std::to_string(line) : source;
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, const std::string& message)
    : std::runtime_error(location(source, line) + ": " + message), source_(std::move(source)), line_(line) {}

std::vector<ConfigEntry> parse_config_text(std::string_view text, const std::string& source) {
  std::vector<ConfigEntry> out;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(source, line_no, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line_no, "missing key before '='");
    if (!section.empty()) key = section + "." + key;
    out.push_back({std::move(key), std::move(value), line_no});
  }
  return out;
}

ConfigEntry parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--set", 0, "expected key=value, got '" + text + "'");
  ConfigEntry e{trim(std::string_view(text).substr(0, eq)), trim(std::string_view(text).substr(eq + 1)), 0};
  if (e.key.empty()) throw ConfigError("--set", 0, "missing key in '" + text + "'");
  return e;
}

void apply_setting(ScenarioSpec& spec, const ConfigEntry& entry, const std::string& source) {
  const auto it = table().find(entry.key);
  if (it == table().end()) throw ConfigError(source, entry.line, "unknown key '" + entry.key + "'");
  try {
    it->second.set(spec, entry.value);
  } catch (const std::string& why) {
    throw ConfigError(source, entry.line, entry.key + ": " + why + ", got '" + entry.value + "'");
  }
}

sim::ScenarioSpec scenario_from_text(std::string_view text, const std::string& source,
                                     const std::vector<std::string>& overrides) {
  ScenarioSpec spec;
  std::set<std::string> seen;
  for (const auto& e : parse_config_text(text, source)) {
    if (!seen.insert(e.key).second) throw ConfigError(source, e.line, "duplicate key '" + e.key + "'");
    apply_setting(spec, e, source);
  }
  for (const auto& o : overrides) apply_setting(spec, parse_override(o), "--set");
  try {
    spec.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(source, 0, ex.what());
  }
  return spec;
}

sim::ScenarioSpec load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_text(buf.str(), path, overrides);
}

std::string dump_settings(const sim::ScenarioSpec& spec) {
  std::string out;
  for (const auto& [key, binding] : table()) out += key + " = " + binding.get(spec) + "\n";
  return out;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, binding] : table()) keys.push_back(key);
  return keys;
}

}  // namespace vpc_cilqr::app
