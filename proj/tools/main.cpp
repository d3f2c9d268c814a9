#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vpc_cilqr/app/config.hpp"
#include "vpc_cilqr/app/runner.hpp"

namespace {

void add_common(CLI::App* cmd, vpc_cilqr::app::RunRequest& req, std::string& longitudinal, bool multi_config) {
  auto* config = cmd->add_option("--config", req.configs, "Scenario config file")->required()->check(CLI::ExistingFile);
  if (multi_config) config->expected(1, 2);
  else config->expected(1);
  cmd->add_option("--out", req.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", req.seed, "Override scenario.seed");
  cmd->add_option("--controller", req.controller, "cilqr or vpc-cilqr")
      ->check(CLI::IsMember({"cilqr", "vpc-cilqr"}));
  cmd->add_option("--longitudinal", longitudinal, "Longitudinal planner on/off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--set", req.overrides, "Override a config key (key=value), repeatable")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace vpc_cilqr::app;
  CLI::App app{"Lane-keeping and car-following closed-loop simulator with CILQR planners"};
  app.require_subcommand(1);

  RunRequest req;
  std::string longitudinal;
  auto* run = app.add_subcommand("run", "Run one scenario and write its log, metrics and plot script");
  add_common(run, req, longitudinal, false);
  auto* compare = app.add_subcommand("compare", "Run two controllers with one seed and report side by side");
  add_common(compare, req, longitudinal, true);
  auto* bench = app.add_subcommand("benchmark", "Time the solvers over planner inputs recorded in a run");
  add_common(bench, req, longitudinal, false);
  bench->add_option("--states", req.benchmark_states, "Number of recorded states to time")->capture_default_str();
  auto* keys = app.add_subcommand("keys", "List every config key with its default value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }
  if (!longitudinal.empty()) req.longitudinal = longitudinal == "on";

  try {
    if (*run) return run_command(req, std::cout, std::cerr);
    if (*compare) return compare_command(req, std::cout, std::cerr);
    if (*bench) return benchmark_command(req, std::cout, std::cerr);
    if (*keys) {
      std::cout << dump_settings({});
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}
