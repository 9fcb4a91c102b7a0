#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hevsim/harness.hpp"

namespace hevsim::config {

/// One `key = value` entry with its source line for diagnostics.
struct Value {
  std::string raw;
  int line = 0;
};

struct Section {
  std::string name;
  std::string label; // e.g. [scenario eco_cold] -> name "scenario", label "eco_cold"
  int line = 0;
  std::map<std::string, Value> values;
};

/// Line-oriented sectioned config text: `[section]` / `[section label]`
/// headers, `key = value` entries, `#` comments.
struct File {
  std::string path;
  std::vector<Section> sections;

  const Section* find(const std::string& name, const std::string& label = "") const;
  std::vector<const Section*> all(const std::string& name) const;
  /// Section that must exist (throws ConfigError naming the file).
  const Section& require(const std::string& name, const std::string& label = "") const;

  double number(const Section& s, const std::string& key) const;
  double number_or(const Section& s, const std::string& key, double fallback) const;
  std::string text(const Section& s, const std::string& key) const;
  std::string text_or(const Section& s, const std::string& key, const std::string& fallback) const;
  std::vector<double> number_list(const Section& s, const std::string& key) const;
  /// "x:y, x:y, ..." breakpoint table.
  std::vector<std::pair<double, double>> pair_list(const Section& s, const std::string& key) const;

  [[noreturn]] void fail(int line, const std::string& msg) const;
};

File parse_file(const std::string& path);

traffic::Corridor load_corridor(const std::string& path);

struct SweepSpec {
  std::vector<double> temps_c;
  int seeds = 3;
  std::string scenario; // template scenario name
};

struct AppConfig {
  harness::SimParams params;
  std::map<std::string, harness::Scenario> scenarios;
  std::vector<std::string> scenario_order;
  SweepSpec sweep;
  std::vector<std::string> calibration_scenarios;
  std::string out_dir = "out";
};

/// Loads the full application config, resolving corridor paths relative
/// to the config file and validating every module-level invariant with
/// line-precise messages.
AppConfig load_app_config(const std::string& path);

} // namespace hevsim::config
