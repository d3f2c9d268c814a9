#include "vpc_cilqr/app/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vpc_cilqr/app/config.hpp"

namespace vpc_cilqr::app {
namespace {

namespace fs = std::filesystem;

// Reference max |offset| ratio (plain CILQR over VPC-CILQR) on the first track.
constexpr double kReferenceMaxOffsetRatio = 0.71 / 0.52;

constexpr const char* kPlotScript = R"(#!/usr/bin/env python3
"""Plot heading error, lateral offset, speed and gap against distance."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("simlog.csv")
cols = {"s_m": [], "theta_rad": [], "delta_m": [], "v_mps": [], "D_m": [], "v_l_mps": []}
with open(path, newline="") as f:
    for row in csv.DictReader(f):
        for k in cols:
            cols[k].append(float(row[k]) if row[k] else float("nan"))

s = cols["s_m"]
fig, ax = plt.subplots(4, 1, sharex=True, figsize=(9, 9))
ax[0].plot(s, cols["theta_rad"], lw=0.8)
ax[0].set_ylabel("theta [rad]")
ax[1].plot(s, cols["delta_m"], lw=0.8)
ax[1].set_ylabel("Delta [m]")
ax[2].plot(s, cols["v_mps"], lw=0.8, label="ego")
ax[2].plot(s, cols["v_l_mps"], lw=0.8, label="lead")
ax[2].set_ylabel("v [m/s]")
ax[2].legend(loc="best")
ax[3].plot(s, cols["D_m"], lw=0.8)
ax[3].set_ylabel("D [m]")
ax[3].set_xlabel("distance [m]")
for a in ax:
    a.grid(alpha=0.3)
fig.tight_layout()
out = path.with_suffix(".png")
fig.savefig(out, dpi=120)
print(out)
)";

int exit_code_for(const std::string& terminal_event) {
  return terminal_event == "completed" ? kExitOk : kExitAbnormal;
}

nlohmann::json metrics_json(const sim::Metrics& m) {
  nlohmann::json j;
  j["terminal_event"] = m.terminal_event;
  j["samples"] = m.samples;
  j["duration_s"] = m.duration;
  j["distance_m"] = m.distance;
  j["heading_mae_rad"] = m.heading_mae;
  j["offset_mae_m"] = m.offset_mae;
  j["max_abs_offset_m"] = m.max_abs_offset;
  j["s_at_max_abs_offset_m"] = m.s_at_max_abs_offset;
  j["max_abs_offset_peak_curvature_m"] = m.max_abs_offset_peak_curvature;
  j["following_samples"] = m.following_samples;
  j["speed_mae_mps"] = m.speed_mae;
  j["gap_mae_m"] = m.gap_mae;
  j["final_gap_m"] = m.final_gap;
  j["final_speed_error_mps"] = m.final_speed_error;
  j["min_gap_m"] = m.min_gap;
  j["lateral_solve_mean_ms"] = m.lateral_solve_mean_ms;
  j["lateral_solve_max_ms"] = m.lateral_solve_max_ms;
  j["longitudinal_solve_mean_ms"] = m.longitudinal_solve_mean_ms;
  j["longitudinal_solve_max_ms"] = m.longitudinal_solve_max_ms;
  j["lateral_iterations_mean"] = m.lateral_iterations_mean;
  j["nonconverged_solves"] = m.nonconverged_solves;
  return j;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

TimingStats summarize(std::vector<double> samples) {
  TimingStats s;
  s.samples = samples.size();
  if (samples.empty()) return s;
  double total = 0.0;
  for (double x : samples) total += x;
  s.mean_ms = total / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  s.max_ms = samples.back();
  s.p95_ms = samples[static_cast<std::size_t>(std::floor(0.95 * static_cast<double>(samples.size() - 1)))];
  return s;
}

template <typename Sample>
std::vector<Sample> evenly_spaced(const std::vector<Sample>& all, std::size_t count) {
  if (all.size() <= count) return all;
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(all[i * all.size() / count]);
  return out;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

sim::ScenarioSpec resolve_scenario(const RunRequest& request, const std::string& config) {
  std::vector<std::string> overrides;
  if (request.seed) overrides.push_back("scenario.seed=" + std::to_string(*request.seed));
  if (request.controller) overrides.push_back("scenario.controller=" + *request.controller);
  if (request.longitudinal) overrides.push_back(std::string("scenario.longitudinal=") + (*request.longitudinal ? "true" : "false"));
  overrides.insert(overrides.end(), request.overrides.begin(), request.overrides.end());
  return load_scenario(config, overrides);
}

std::string format_metrics(const sim::Metrics& m) {
  std::ostringstream os;
  os << "terminal_event          " << m.terminal_event << '\n'
     << "duration_s              " << fixed(m.duration, 3) << '\n'
     << "distance_m              " << fixed(m.distance, 2) << '\n'
     << "heading_mae_rad         " << fixed(m.heading_mae, 5) << '\n'
     << "offset_mae_m            " << fixed(m.offset_mae, 4) << '\n'
     << "max_abs_offset_m        " << fixed(m.max_abs_offset, 4) << " (at s = " << fixed(m.s_at_max_abs_offset, 1)
     << " m)\n"
     << "max_abs_offset_kmax_m   " << fixed(m.max_abs_offset_peak_curvature, 4) << '\n';
  if (m.following_samples > 0) {
    os << "speed_mae_mps           " << fixed(m.speed_mae, 4) << '\n'
       << "gap_mae_m               " << fixed(m.gap_mae, 4) << '\n'
       << "final_gap_m             " << fixed(m.final_gap, 3) << '\n'
       << "final_speed_error_mps   " << fixed(m.final_speed_error, 4) << '\n'
       << "min_gap_m               " << fixed(m.min_gap, 3) << '\n';
  }
  os << "lateral_solve_ms        mean " << fixed(m.lateral_solve_mean_ms, 3) << "  max "
     << fixed(m.lateral_solve_max_ms, 3) << '\n'
     << "longitudinal_solve_ms   mean " << fixed(m.longitudinal_solve_mean_ms, 3) << "  max "
     << fixed(m.longitudinal_solve_max_ms, 3) << '\n'
     << "lateral_iterations_mean " << fixed(m.lateral_iterations_mean, 2) << '\n'
     << "nonconverged_solves     " << m.nonconverged_solves << '\n';
  return os.str();
}

void write_artifacts(const fs::path& dir, const sim::ScenarioSpec& spec, const sim::SimLog& log,
                     const sim::Metrics& metrics) {
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "simlog.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / "simlog.csv").string());
    sim::write_csv(log, csv);
  }
  write_text(dir / "metrics.txt", format_metrics(metrics));
  write_text(dir / "metrics.json", metrics_json(metrics).dump(2) + "\n");
  write_text(dir / "plot.py", kPlotScript);
  write_text(dir / "config.resolved", dump_settings(spec));
}

int run_command(const RunRequest& request, std::ostream& out, std::ostream& err) {
  if (request.configs.size() != 1) {
    err << "run: exactly one --config is required\n";
    return kExitConfigError;
  }
  sim::ScenarioSpec spec;
  try {
    spec = resolve_scenario(request, request.configs.front());
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  const sim::SimLog log = sim::run_scenario(spec);
  const sim::Metrics metrics = sim::compute_metrics(log);
  write_artifacts(request.out_dir, spec, log, metrics);
  out << format_metrics(metrics);
  if (metrics.terminal_event != "completed") err << "run ended early: " << metrics.terminal_event << '\n';
  return exit_code_for(metrics.terminal_event);
}

int compare_command(const RunRequest& request, std::ostream& out, std::ostream& err) {
  if (request.configs.empty() || request.configs.size() > 2) {
    err << "compare: give one config (cilqr vs vpc-cilqr) or two configs\n";
    return kExitConfigError;
  }
  sim::ScenarioSpec a;
  sim::ScenarioSpec b;
  try {
    if (request.configs.size() == 1) {
      RunRequest r = request;
      r.controller = "cilqr";
      a = resolve_scenario(r, request.configs[0]);
      r.controller = "vpc-cilqr";
      b = resolve_scenario(r, request.configs[0]);
    } else {
      a = resolve_scenario(request, request.configs[0]);
      b = resolve_scenario(request, request.configs[1]);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  if (a.seed != b.seed) {
    err << "compare: seeds differ (" << a.seed << " vs " << b.seed << "); runs must share one seed\n";
    return kExitConfigError;
  }
  sim::ScenarioSpec a_norm = a;
  a_norm.controller = b.controller;
  if (dump_settings(a_norm) != dump_settings(b)) {
    err << "compare: configs differ in more than scenario.controller\n";
    return kExitConfigError;
  }

  const std::string name_a = std::string("a_") + sim::to_string(a.controller);
  const std::string name_b = std::string("b_") + sim::to_string(b.controller);
  const sim::SimLog log_a = sim::run_scenario(a);
  const sim::SimLog log_b = sim::run_scenario(b);
  const sim::Metrics ma = sim::compute_metrics(log_a);
  const sim::Metrics mb = sim::compute_metrics(log_b);
  write_artifacts(request.out_dir / name_a, a, log_a, ma);
  write_artifacts(request.out_dir / name_b, b, log_b, mb);

  std::ostringstream os;
  auto row = [&](const std::string& label, double va, double vb, int precision) {
    os << std::left << std::setw(26) << label << std::right << std::setw(14) << fixed(va, precision)
       << std::setw(14) << fixed(vb, precision) << '\n';
  };
  os << "seed " << a.seed << ", track " << a.track << '\n';
  os << std::left << std::setw(26) << "metric" << std::right << std::setw(14) << sim::to_string(a.controller)
     << std::setw(14) << sim::to_string(b.controller) << '\n';
  os << std::left << std::setw(26) << "terminal_event" << std::right << std::setw(14) << ma.terminal_event
     << std::setw(14) << mb.terminal_event << '\n';
  row("heading_mae_rad", ma.heading_mae, mb.heading_mae, 5);
  row("offset_mae_m", ma.offset_mae, mb.offset_mae, 4);
  row("max_abs_offset_m", ma.max_abs_offset, mb.max_abs_offset, 4);
  row("max_abs_offset_kmax_m", ma.max_abs_offset_peak_curvature, mb.max_abs_offset_peak_curvature, 4);
  if (ma.following_samples > 0 || mb.following_samples > 0) {
    row("speed_mae_mps", ma.speed_mae, mb.speed_mae, 4);
    row("gap_mae_m", ma.gap_mae, mb.gap_mae, 4);
  }
  row("lateral_solve_mean_ms", ma.lateral_solve_mean_ms, mb.lateral_solve_mean_ms, 3);
  const double ratio = mb.max_abs_offset > 0.0 ? ma.max_abs_offset / mb.max_abs_offset : std::nan("");
  os << "max_abs_offset ratio A/B  " << fixed(ratio, 3) << "  (reference " << fixed(kReferenceMaxOffsetRatio, 3)
     << ")\n";
  write_text(request.out_dir / "compare.txt", os.str());
  out << os.str();
  return std::max(exit_code_for(ma.terminal_event), exit_code_for(mb.terminal_event));
}

BenchmarkReport benchmark_solvers(const sim::ScenarioSpec& spec, const sim::SimLog& log, std::size_t max_states) {
  BenchmarkReport report;
  std::vector<double> times;
  for (const auto& sample : evenly_spaced(log.lateral_inputs, max_states)) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto plan = planning::plan_steering(sample.state, sample.speed, spec.vehicle, std::nullopt, spec.lateral,
                                              spec.solver);
    times.push_back(ms_since(t0));
    (void)plan;
  }
  report.lateral = summarize(std::move(times));
  times.clear();
  for (const auto& sample : evenly_spaced(log.longitudinal_inputs, max_states)) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto problem = planning::build_following_problem(sample.state, sample.lead, spec.following);
    const auto result = ilqr::solve(problem, std::nullopt, spec.solver);
    times.push_back(ms_since(t0));
    (void)result;
  }
  report.longitudinal = summarize(std::move(times));
  return report;
}

int benchmark_command(const RunRequest& request, std::ostream& out, std::ostream& err) {
  if (request.configs.size() != 1) {
    err << "benchmark: exactly one --config is required\n";
    return kExitConfigError;
  }
  sim::ScenarioSpec spec;
  try {
    spec = resolve_scenario(request, request.configs.front());
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  spec.capture_planner_inputs = true;
  const sim::SimLog log = sim::run_scenario(spec);
  const BenchmarkReport r = benchmark_solvers(spec, log, request.benchmark_states);
  std::ostringstream os;
  auto line = [&](const char* name, const TimingStats& s) {
    os << std::left << std::setw(14) << name << std::right << "states " << std::setw(6) << s.samples << "  mean "
       << fixed(s.mean_ms, 4) << " ms  p95 " << fixed(s.p95_ms, 4) << " ms  max " << fixed(s.max_ms, 4) << " ms\n";
  };
  line("lateral", r.lateral);
  line("longitudinal", r.longitudinal);
  fs::create_directories(request.out_dir);
  write_text(request.out_dir / "benchmark.txt", os.str());
  out << os.str();
  return kExitOk;
}

}  // namespace vpc_cilqr::app
