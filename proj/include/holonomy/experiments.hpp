#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "holonomy/config.hpp"
#include "json.hpp"

namespace holonomy {

// Command-line switches that travel alongside the resolved config.
struct RunOptions {
  bool accept = false;    // tolerance violations turn into exit code 2
  int threads = 1;        // scan parallelism over (curve, rotation) pairs
  std::string out_dir = ".";
};

struct RunReport {
  nlohmann::json document;              // full report, ready to serialize
  std::string csv_text;                 // per-(curve, W) table; "" when n/a
  std::vector<std::string> violations;  // one line per tolerance failure
  int exit_code = 0;                    // 0, or 2 when accepting and violated
};

// Runs the configured experiment and assembles the report document. The
// document always carries: schema_version, experiment, environment {version,
// options_hash}, config (canonical text), rows, summary and a report_hash
// computed over everything except the timestamp.
RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

// Parse + resolve + run + write the report files under opts.out_dir.
// Returns 0 on success, 1 on config/runtime errors (message goes to log),
// 2 when opts.accept is set and a tolerance gate tripped.
int run_from_file(const std::string& config_path, const std::vector<std::string>& overrides,
                  const RunOptions& opts, std::ostream& log);

// Available charts, fields, curve families and experiments, one block each.
std::string list_builtins();

}  // namespace holonomy
