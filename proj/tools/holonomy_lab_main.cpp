#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "holonomy/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gauge-transport laboratory: runs config-driven experiments and"
               " writes JSON/CSV reports"};
  std::string experiment;
  std::string config_path;
  std::vector<std::string> overrides;
  holonomy::RunOptions opts;
  app.add_option("experiment", experiment,
                 "experiment to run, or 'list' to print the name registries")
      ->required();
  app.add_option("--config", config_path, "path to a [section] key = value config file");
  app.add_flag("--accept", opts.accept, "turn tolerance violations into exit code 2");
  app.add_option("--set", overrides, "override a config entry as section.key=value");
  app.add_option("--out", opts.out_dir, "directory for the report files");
  app.add_option("--threads", opts.threads, "worker threads for scan experiments")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  if (experiment == "list") {
    std::cout << holonomy::list_builtins();
    return 0;
  }
  if (config_path.empty()) {
    std::cerr << "error: --config is required to run an experiment\n";
    return 1;
  }
  // the positional name wins over the config's own experiment entry
  overrides.push_back("experiment.name=" + experiment);
  return holonomy::run_from_file(config_path, overrides, opts, std::cout);
}
