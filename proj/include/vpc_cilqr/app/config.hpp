#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vpc_cilqr/sim/scenario.hpp"

namespace vpc_cilqr::app {

/// Configuration problem; `line` is 0 when the error is not tied to a file line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, const std::string& message);

  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses `key = value` lines. '#' starts a comment, blank lines are skipped
/// and a `[section]` header prefixes the following keys with "section.".
std::vector<ConfigEntry> parse_config_text(std::string_view text, const std::string& source);

/// Splits a command-line override of the form key=value.
ConfigEntry parse_override(const std::string& text);

/// Applies one setting. Throws ConfigError for unknown keys or malformed values.
void apply_setting(sim::ScenarioSpec& spec, const ConfigEntry& entry, const std::string& source);

/// Reads the file, applies its entries and then the overrides, and validates.
/// Duplicate keys within the file are rejected.
sim::ScenarioSpec load_scenario(const std::string& path, const std::vector<std::string>& overrides = {});

/// Same as load_scenario but from text already in memory.
sim::ScenarioSpec scenario_from_text(std::string_view text, const std::string& source,
                                     const std::vector<std::string>& overrides = {});

/// Every known key with its current value, one `key = value` line each, sorted.
std::string dump_settings(const sim::ScenarioSpec& spec);

std::vector<std::string> known_keys();

}  // namespace vpc_cilqr::app
