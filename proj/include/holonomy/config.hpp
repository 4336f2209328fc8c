#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "holonomy/gauge.hpp"
#include "holonomy/geometry.hpp"
#include "holonomy/transport.hpp"

namespace holonomy {

// Malformed text raises ConfigError and unresolvable names UnknownNameError
// (both from types.hpp); messages carry origin:line:column and, for name
// errors, the list of valid options.
//
// Flat `[section] key = value` text, parsed but not yet interpreted.
// Duplicate keys within a section are rejected; '#' starts a comment.
class RawConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    int column = 0;
  };

  static RawConfig from_file(const std::string& path);
  static RawConfig from_string(const std::string& text, const std::string& origin);

  bool has(const std::string& section, const std::string& key) const;
  // Missing entries raise ConfigError naming the section and key.
  const Entry& at(const std::string& section, const std::string& key) const;
  const Entry* find(const std::string& section, const std::string& key) const;
  // Keys of one section in insertion order (empty when the section is absent).
  std::vector<std::string> keys(const std::string& section) const;

  // Applies one `section.key=value` override (the CLI --set form).
  void set(const std::string& assignment);

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::vector<std::string>> order_;
};

// A fully resolved experiment: every name checked, every object built, and a
// canonical re-serialization that reproduces this resolution when re-parsed.
struct ExperimentConfig {
  std::string experiment;
  std::string chart_name;
  MetricChart chart;
  std::string field_name;
  Orientation field_orientation = Orientation::antidual;
  ConnectionField field;
  std::vector<std::pair<std::string, Curve>> curves;
  // rotation generators as 3 left + 3 right basis coefficients
  std::vector<std::pair<std::string, So4Element>> rotations;
  TransportOptions transport;
  unsigned seed = 0;
  double tolerance = 0.0;     // acceptance-gate threshold (experiment-specific default)
  std::string fault;          // "" or "kernel-sign-flip" (gate self-test hook)
  std::string json_name;      // report file name, "" writes <experiment>.json
  std::string csv_name;       // optional row table, "" skips the CSV
  std::string canonical;      // resolved config as config-format text
};

ExperimentConfig resolve_config(const RawConfig& raw);

// Name registries backing the config resolution and `list` output.
const std::vector<std::string>& experiment_names();
const std::vector<std::string>& chart_names();
const std::vector<std::string>& field_names();
const std::vector<std::string>& curve_family_names();
Curve builtin_curve(const std::string& family);

}  // namespace holonomy
