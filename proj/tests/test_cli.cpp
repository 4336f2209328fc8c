#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "holonomy/config.hpp"
#include "holonomy/experiments.hpp"

using namespace holonomy;

namespace {

RawConfig parse(const std::string& text) { return RawConfig::from_string(text, "test.cfg"); }

// captures the ConfigError message so tests can assert on its pieces
template <class Fn>
std::string config_error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// a fast single-pair configuration used by the run tests
std::string small_config(const std::string& experiment, const std::string& field,
                         const std::string& extra = "") {
  return "[experiment]\nname = " + experiment + "\nn = 60\nseed = 7\n" + extra +
         "\n[field]\nname = " + field +
         "\n\n[curves]\nc = line\n\n[rotations]\nw = 1 0 0 0 0 0\n";
}

nlohmann::json without_timestamp(nlohmann::json doc) {
  doc.erase("timestamp");
  return doc;
}

}  // namespace

TEST_CASE("config parser: sections, comments and trimming") {
  const RawConfig raw =
      parse("# preamble\n[experiment]\n  name = laplacian  # trailing note\n\n"
            "[field]\nname=zero\ncenter =  0 0 0 1\n");
  CHECK(raw.at("experiment", "name").value == "laplacian");
  CHECK(raw.at("field", "name").value == "zero");
  CHECK(raw.at("field", "center").value == "0 0 0 1");
  CHECK(raw.at("experiment", "name").line == 3);
  CHECK(raw.has("field", "center"));
  CHECK_FALSE(raw.has("field", "rho"));
  CHECK(raw.keys("field") == std::vector<std::string>{"name", "center"});
}

TEST_CASE("config parser: errors carry origin, line and column") {
  auto msg = config_error_of([] { parse("[a]\nx = 1\nx = 2\n"); });
  CHECK(contains(msg, "test.cfg:3"));
  CHECK(contains(msg, "duplicate key 'x'"));

  msg = config_error_of([] { parse("[a]\nboom\n"); });
  CHECK(contains(msg, "test.cfg:2"));
  CHECK(contains(msg, "expected 'key = value'"));

  msg = config_error_of([] { parse("x = 1\n"); });
  CHECK(contains(msg, "before any [section]"));

  msg = config_error_of([] { parse("[a\n"); });
  CHECK(contains(msg, "unterminated section header"));

  msg = config_error_of([] { parse("[a]\nx = 1\n").at("a", "missing"); });
  CHECK(contains(msg, "missing required key 'missing'"));
}

TEST_CASE("config overrides use the section.key=value form") {
  RawConfig raw = parse("[experiment]\nname = laplacian\n[field]\nname = zero\n");
  raw.set("experiment.n = 400");
  CHECK(raw.at("experiment", "n").value == "400");
  raw.set("field.rho=2.5");
  CHECK(raw.at("field", "rho").value == "2.5");

  const auto msg = config_error_of([&] { raw.set("experiment-n-400"); });
  CHECK(contains(msg, "section.key=value"));
}

TEST_CASE("resolution fills defaults and validates names") {
  const auto cfg =
      resolve_config(parse("[experiment]\nname = laplacian\n[field]\nname = zero\n"));
  CHECK(cfg.curves.size() == 5);     // the whole builtin zoo
  CHECK(cfg.rotations.size() == 6);  // the so(4) basis
  CHECK(cfg.transport.n == 2000);
  CHECK(cfg.tolerance == 1e-6);
  CHECK(cfg.chart_name == "flat");
  CHECK(cfg.seed == 0);

  auto msg = config_error_of(
      [] { resolve_config(parse("[experiment]\nname = bogus\n[field]\nname = zero\n")); });
  CHECK(contains(msg, "unknown experiment 'bogus'"));
  CHECK(contains(msg, "selfdual-report"));
  CHECK(contains(msg, "lemma-diagnostics"));

  msg = config_error_of(
      [] { resolve_config(parse("[experiment]\nname = scan\n[field]\nname = su5\n")); });
  CHECK(contains(msg, "unknown field 'su5'"));
  CHECK(contains(msg, "bpst"));

  msg = config_error_of([] {
    resolve_config(
        parse("[experiment]\nname = scan\n[field]\nname = zero\n[curves]\nc = helix\n"));
  });
  CHECK(contains(msg, "unknown curve family 'helix'"));
  CHECK(contains(msg, "figure_eight"));

  msg = config_error_of([] {
    resolve_config(
        parse("[experiment]\nname = scan\n[field]\nname = zero\n[rotations]\nw = 1 2 3\n"));
  });
  CHECK(contains(msg, "needs 6 numbers"));

  msg = config_error_of([] {
    resolve_config(parse("[experiment]\nname = scan\nseed = -3\n[field]\nname = zero\n"));
  });
  CHECK(contains(msg, "non-negative"));
}

TEST_CASE("canonical serialization round-trips the resolution") {
  const std::string text =
      "[experiment]\nname = laplacian\nn = 60\nseed = 11\ntolerance = 1e-5\n"
      "[field]\nname = bpst\nrho = 0.9\ncenter = 0.1 0 -0.1 0.2\norientation = antidual\n"
      "[curves]\nc = circle\n[rotations]\nw = 0 0 0 1 0 0\n";
  const auto cfg = resolve_config(parse(text));
  const auto again = resolve_config(RawConfig::from_string(cfg.canonical, "canonical"));
  CHECK(again.canonical == cfg.canonical);
  CHECK(again.experiment == cfg.experiment);
  CHECK(again.tolerance == cfg.tolerance);
  CHECK(again.transport.n == cfg.transport.n);

  // and the round-tripped config reproduces the report hash
  const RunOptions opts;
  const auto a = run_experiment(cfg, opts);
  const auto b = run_experiment(again, opts);
  CHECK(a.document["report_hash"] == b.document["report_hash"]);
}

TEST_CASE("reports are deterministic up to the timestamp") {
  const auto cfg = resolve_config(
      parse("[experiment]\nname = selfdual-report\nseed = 7\n[field]\nname = bpst\n"));
  const RunOptions opts;
  const auto a = run_experiment(cfg, opts);
  const auto b = run_experiment(cfg, opts);
  CHECK(a.document["report_hash"] == b.document["report_hash"]);
  CHECK(without_timestamp(a.document).dump() == without_timestamp(b.document).dump());
  CHECK(a.document["schema_version"] == 1);
  CHECK(a.document["environment"].contains("version"));
  CHECK(a.document["environment"].contains("options_hash"));
}

TEST_CASE("self-duality gate: instanton passes, perturbed field trips it") {
  RunOptions opts;
  opts.accept = true;

  const auto good = run_experiment(
      resolve_config(parse("[experiment]\nname = selfdual-report\n[field]\nname = bpst\n")),
      opts);
  CHECK(good.exit_code == 0);
  CHECK(good.violations.empty());
  CHECK(good.document["summary"]["max_rel_dual_violation"].get<double>() < 1e-10);

  const auto bad = run_experiment(
      resolve_config(parse(
          "[experiment]\nname = selfdual-report\n[field]\nname = perturbed\nepsilon = 0.1\n")),
      opts);
  CHECK(bad.exit_code == 2);
  CHECK_FALSE(bad.violations.empty());
}

TEST_CASE("zero-field laplacian: every norm is exactly zero") {
  RunOptions opts;
  opts.accept = true;
  const auto rep =
      run_experiment(resolve_config(parse(small_config("laplacian", "zero"))), opts);
  CHECK(rep.exit_code == 0);
  CHECK(rep.violations.empty());
  REQUIRE(rep.document["rows"].size() == 2);  // closed-form and kernel routes
  for (const auto& row : rep.document["rows"]) {
    CHECK(row["norm"].get<double>() == 0.0);
    CHECK(row["rel_norm"].get<double>() == 0.0);
  }
  CHECK(contains(rep.csv_text, "curve,W,route,norm"));
  CHECK(contains(rep.csv_text, "c,w,closed_form"));
}

TEST_CASE("injected sign flip trips the oracle gate with the row flagged") {
  const std::string healthy = small_config("oracle-check", "abelian_constant");
  const std::string faulty =
      small_config("oracle-check", "abelian_constant", "fault = kernel-sign-flip\n");
  RunOptions opts;
  opts.accept = true;

  const auto ok = run_experiment(resolve_config(parse(healthy)), opts);
  CHECK(ok.exit_code == 0);
  CHECK(ok.violations.empty());
  CHECK(ok.document["rows"][0]["violation"] == false);

  const auto bad = run_experiment(resolve_config(parse(faulty)), opts);
  CHECK(bad.exit_code == 2);
  REQUIRE_FALSE(bad.violations.empty());
  CHECK(contains(bad.violations[0], "discrepancy"));
  CHECK(bad.document["rows"][0]["violation"] == true);

  RunOptions report_only;  // without --accept the violation is only recorded
  const auto soft = run_experiment(resolve_config(parse(faulty)), report_only);
  CHECK(soft.exit_code == 0);
  CHECK_FALSE(soft.violations.empty());
}

TEST_CASE("scan reports are identical across thread counts") {
  const std::string text =
      "[experiment]\nname = scan\nn = 80\n[field]\nname = abelian_constant\n"
      "[curves]\na = line\nb = circle\n[rotations]\nw1 = 1 0 0 0 0 0\nw2 = 0 1 0 0 0 0\n"
      "w3 = 0 0 0 1 0 0\n";
  const auto cfg = resolve_config(parse(text));
  RunOptions serial;
  RunOptions parallel;
  parallel.threads = 4;
  const auto a = run_experiment(cfg, serial);
  const auto b = run_experiment(cfg, parallel);
  CHECK(a.document["report_hash"] == b.document["report_hash"]);
  CHECK(a.csv_text == b.csv_text);
  CHECK(a.document["rows"].size() == 6);
}

TEST_CASE("lemma diagnostics rows are finite and vanish on the zero field") {
  RunOptions opts;
  opts.accept = true;
  const auto rep = run_experiment(
      resolve_config(parse(small_config("lemma-diagnostics", "zero"))), opts);
  CHECK(rep.exit_code == 0);
  REQUIRE(rep.document["rows"].size() == 1);
  CHECK(rep.document["rows"][0]["rel_max_J"].get<double>() == 0.0);
  CHECK(rep.document["rows"][0]["recovery_direct_norm"].get<double>() == 0.0);
}

TEST_CASE("list_builtins names every registry entry the docs promise") {
  const std::string text = list_builtins();
  for (const std::string name : {"bpst", "s4_stereographic", "laplacian", "figure_eight",
                                 "scan", "zero", "split_line", "lemma-diagnostics"})
    CHECK(contains(text, name));
}

TEST_CASE("run_from_file writes the report files and maps errors to exit 1") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "holonomy_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "run.cfg";
  std::ofstream(cfg_path) << small_config("laplacian", "zero",
                                          "\n[output]\njson = rep.json\ncsv = rows.csv\n");

  RunOptions opts;
  opts.out_dir = (dir / "out").string();
  std::ostringstream log;
  CHECK(run_from_file(cfg_path.string(), {}, opts, log) == 0);
  CHECK(fs::exists(dir / "out" / "rep.json"));
  CHECK(fs::exists(dir / "out" / "rows.csv"));
  std::ifstream in(dir / "out" / "rep.json");
  const auto doc = nlohmann::json::parse(in);
  CHECK(doc["experiment"] == "laplacian");
  CHECK(doc.contains("report_hash"));
  CHECK(contains(log.str(), "report "));

  std::ostringstream err_log;
  CHECK(run_from_file(cfg_path.string(), {"experiment.name=bogus"}, opts, err_log) == 1);
  CHECK(contains(err_log.str(), "unknown experiment"));

  std::ostringstream missing_log;
  CHECK(run_from_file((dir / "absent.cfg").string(), {}, opts, missing_log) == 1);
  CHECK(contains(missing_log.str(), "cannot open"));

  fs::remove_all(dir);
}
