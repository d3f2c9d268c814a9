#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vpc_cilqr/sim/scenario.hpp"

namespace vpc_cilqr::app {

enum ExitCode : int { kExitOk = 0, kExitConfigError = 1, kExitAbnormal = 2 };

struct RunRequest {
  std::vector<std::string> configs;  // run/benchmark: one; compare: one or two
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> controller;
  std::optional<bool> longitudinal;
  std::vector<std::string> overrides;
  std::size_t benchmark_states = 1000;
};

/// Loads the scenario of `config` with the request's flags layered over the file.
sim::ScenarioSpec resolve_scenario(const RunRequest& request, const std::string& config);

/// Writes simlog.csv, metrics.txt, metrics.json, plot.py and config.resolved.
void write_artifacts(const std::filesystem::path& dir, const sim::ScenarioSpec& spec, const sim::SimLog& log,
                     const sim::Metrics& metrics);

std::string format_metrics(const sim::Metrics& m);

/// Exit 0 when the run completes, 2 on off-track or collision, 1 on bad configuration.
int run_command(const RunRequest& request, std::ostream& out, std::ostream& err);

/// Runs two controllers with one seed. With a single config the controllers
/// are cilqr (A) and vpc-cilqr (B); with two configs they must differ only in
/// scenario.controller.
int compare_command(const RunRequest& request, std::ostream& out, std::ostream& err);

int benchmark_command(const RunRequest& request, std::ostream& out, std::ostream& err);

struct TimingStats {
  std::size_t samples = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};

struct BenchmarkReport {
  TimingStats lateral;
  TimingStats longitudinal;
};

/// Cold-start solve timing over up to `max_states` planner inputs recorded in
/// `log` (which must come from a run with capture_planner_inputs set).
BenchmarkReport benchmark_solvers(const sim::ScenarioSpec& spec, const sim::SimLog& log, std::size_t max_states);

}  // namespace vpc_cilqr::app
