#include "holonomy/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "holonomy/constants.hpp"
#include "holonomy/levy.hpp"

namespace holonomy {

namespace {

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

double finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw std::runtime_error("non-finite value in report cell " + what);
  return v;
}

// norm / scale with the zero-field convention 0/0 = 0
double rel(double norm, double scale) { return scale > 0.0 ? norm / scale : 0.0; }

std::string csv_header() {
  return "curve,W,route,norm,yang_mills,left_pairing,right_pairing,scale,rel_norm\n";
}

std::string csv_line(const std::string& curve, const std::string& w, const LaplacianReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << curve << "," << w << "," << r.route << "," << r.norm << "," << r.yang_mills_norm << ","
      << r.left_pairing_norm << "," << r.right_pairing_norm << "," << r.scale << ","
      << rel(r.norm, r.scale) << "\n";
  return out.str();
}

nlohmann::json laplacian_row(const std::string& curve, const std::string& w,
                             const LaplacianReport& r) {
  return {{"curve", curve},
          {"W", w},
          {"route", r.route},
          {"norm", finite(r.norm, "norm")},
          {"term_norms",
           {{"yang_mills", finite(r.yang_mills_norm, "yang_mills")},
            {"left_pairing", finite(r.left_pairing_norm, "left_pairing")},
            {"right_pairing", finite(r.right_pairing_norm, "right_pairing")}}},
          {"scale", finite(r.scale, "scale")},
          {"rel_norm", finite(rel(r.norm, r.scale), "rel_norm")}};
}

// runs fn(i) for i in [0, count) on the requested number of threads; results
// are written by index, so the assembly stays deterministic
template <class Fn>
void parallel_for(int count, int threads, Fn fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < count;) fn(i);
  };
  std::vector<std::thread> pool;
  const int spawned = std::min(threads, count) - 1;
  pool.reserve(spawned);
  for (int t = 0; t < spawned; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

void run_selfdual(const ExperimentConfig& cfg, nlohmann::json& rows, nlohmann::json& summary,
                  std::vector<std::string>& violations) {
  std::mt19937_64 gen(cfg.seed);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  // +1 selects the self-dual half, which must vanish for the antidual field
  const double sign = cfg.field_orientation == Orientation::antidual ? +1.0 : -1.0;
  const int n_points = 50;
  double max_dual = 0.0, max_ym = 0.0;
  for (int i = 0; i < n_points; ++i) {
    Vec4 x;
    for (int mu = 0; mu < 4; ++mu) x[mu] = coord(gen);
    const TwoFormBlock f = curvature(cfg.field, x);
    const TwoFormBlock vanishing = (f + metric_hodge(cfg.chart, x, f) * sign) * 0.5;
    const double fn = f.norm();
    const double rel_dual = rel(vanishing.norm(), fn);
    const auto res = ym_residual(cfg.field, cfg.chart, x);
    double rn2 = 0.0;
    for (const auto& m : res) rn2 += m.squaredNorm();
    const double rel_ym = rel(std::sqrt(rn2), fn);
    rows.push_back({{"point", {x[0], x[1], x[2], x[3]}},
                    {"rel_dual_violation", finite(rel_dual, "rel_dual_violation")},
                    {"rel_ym_residual", finite(rel_ym, "rel_ym_residual")}});
    max_dual = std::max(max_dual, rel_dual);
    max_ym = std::max(max_ym, rel_ym);
  }
  summary["points"] = n_points;
  summary["max_rel_dual_violation"] = max_dual;
  summary["max_rel_ym_residual"] = max_ym;
  if (max_dual > cfg.tolerance)
    violations.push_back("max_rel_dual_violation " + std::to_string(max_dual) + " exceeds " +
                         std::to_string(cfg.tolerance));
}

void run_laplacian(const ExperimentConfig& cfg, bool with_kernel_route, int threads,
                   nlohmann::json& rows, nlohmann::json& summary,
                   std::vector<std::string>& violations, std::string& csv) {
  struct Pair {
    const std::pair<std::string, Curve>* curve;
    const std::pair<std::string, So4Element>* rotation;
  };
  std::vector<Pair> pairs;
  for (const auto& c : cfg.curves)
    for (const auto& r : cfg.rotations) pairs.push_back({&c, &r});

  std::vector<std::vector<LaplacianReport>> results(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), threads, [&](int i) {
    const auto& [curve, rotation] = pairs[i];
    const RotationPath w(rotation->second);
    results[i].push_back(
        laplacian_closed_form(cfg.field, cfg.chart, curve->second, w, cfg.transport));
    if (with_kernel_route)
      results[i].push_back(
          laplacian_kernel_route(cfg.field, cfg.chart, curve->second, w, cfg.transport));
  });

  csv = csv_header();
  double max_rel = 0.0;
  for (size_t i = 0; i < pairs.size(); ++i)
    for (const auto& rep : results[i]) {
      const auto& [curve, rotation] = pairs[i];
      rows.push_back(laplacian_row(curve->first, rotation->first, rep));
      csv += csv_line(curve->first, rotation->first, rep);
      const double r = rel(rep.norm, rep.scale);
      max_rel = std::max(max_rel, r);
      if (r > cfg.tolerance)
        violations.push_back("curve " + curve->first + " W " + rotation->first + " route " +
                             rep.route + " rel_norm " + std::to_string(r) + " exceeds " +
                             std::to_string(cfg.tolerance));
    }
  summary["pairs"] = pairs.size();
  summary["max_rel_norm"] = max_rel;
}

void run_oracle_check(const ExperimentConfig& cfg, nlohmann::json& rows, nlohmann::json& summary,
                      std::vector<std::string>& violations, std::string& csv) {
  csv = csv_header();
  double max_rel = 0.0;
  for (const auto& [curve_name, curve] : cfg.curves)
    for (const auto& [w_name, generator] : cfg.rotations) {
      const RotationPath w(generator);
      const auto closed = laplacian_closed_form(cfg.field, cfg.chart, curve, w, cfg.transport);
      auto kernel = laplacian_kernel_route(cfg.field, cfg.chart, curve, w, cfg.transport);
      if (cfg.fault == "kernel-sign-flip") kernel.value = -kernel.value;
      const double diff = (closed.value - kernel.value).norm();
      const double rel_diff = diff / std::max(1.0, closed.norm);
      const bool bad = rel_diff > cfg.tolerance;
      rows.push_back({{"curve", curve_name},
                      {"W", w_name},
                      {"closed_norm", finite(closed.norm, "closed_norm")},
                      {"kernel_norm", finite(kernel.norm, "kernel_norm")},
                      {"discrepancy", finite(diff, "discrepancy")},
                      {"rel_discrepancy", finite(rel_diff, "rel_discrepancy")},
                      {"violation", bad}});
      csv += csv_line(curve_name, w_name, closed);
      csv += csv_line(curve_name, w_name, kernel);
      max_rel = std::max(max_rel, rel_diff);
      if (bad)
        violations.push_back("curve " + curve_name + " W " + w_name + " route discrepancy " +
                             std::to_string(rel_diff) + " exceeds " +
                             std::to_string(cfg.tolerance));
    }
  summary["pairs"] = rows.size();
  summary["max_rel_discrepancy"] = max_rel;
}

void run_lemma_diagnostics(const ExperimentConfig& cfg, nlohmann::json& rows,
                           nlohmann::json& summary, std::vector<std::string>& violations) {
  std::vector<double> r_grid;
  for (int i = 1; i <= 10; ++i) r_grid.push_back(0.1 * i);
  const std::vector<double> eps_schedule = {0.2, 0.1, 0.05, 0.025};
  double max_j = 0.0;
  for (const auto& [curve_name, curve] : cfg.curves)
    for (const auto& [w_name, generator] : cfg.rotations) {
      const auto dj = diagnostic_J(cfg.field, cfg.chart, curve, RotationPath(generator), r_grid,
                                   1e-2, cfg.transport);
      const auto rec = pointwise_trace_recovery(cfg.field, cfg.chart, curve, generator, 0.6,
                                                eps_schedule, cfg.transport);
      const double j_rel = rel(dj.max_norm, dj.scale);
      rows.push_back(
          {{"curve", curve_name},
           {"W", w_name},
           {"rel_max_J", finite(j_rel, "rel_max_J")},
           {"derivative_residual", finite(dj.derivative_residual, "derivative_residual")},
           {"expected_derivative_norm", finite(dj.expected_norm, "expected_derivative_norm")},
           {"recovery_rate", finite(rec.rate, "recovery_rate")},
           {"recovery_limit_error", finite(rec.limit_error, "recovery_limit_error")},
           {"recovery_direct_norm", finite(rec.direct_norm, "recovery_direct_norm")}});
      max_j = std::max(max_j, j_rel);
      if (j_rel > cfg.tolerance)
        violations.push_back("curve " + curve_name + " W " + w_name + " rel_max_J " +
                             std::to_string(j_rel) + " exceeds " + std::to_string(cfg.tolerance));
    }
  summary["pairs"] = rows.size();
  summary["max_rel_J"] = max_j;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  RunReport out;
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json summary;
  summary["tolerance"] = cfg.tolerance;

  if (cfg.experiment == "selfdual-report") {
    run_selfdual(cfg, rows, summary, out.violations);
  } else if (cfg.experiment == "laplacian") {
    run_laplacian(cfg, true, 1, rows, summary, out.violations, out.csv_text);
  } else if (cfg.experiment == "scan") {
    run_laplacian(cfg, false, opts.threads, rows, summary, out.violations, out.csv_text);
  } else if (cfg.experiment == "oracle-check") {
    run_oracle_check(cfg, rows, summary, out.violations, out.csv_text);
  } else {  // lemma-diagnostics; resolve_config rejects anything else
    run_lemma_diagnostics(cfg, rows, summary, out.violations);
  }

  nlohmann::json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["experiment"] = cfg.experiment;
  doc["environment"] = {{"version", kToolVersion},
                        {"options_hash", hex64(fnv1a(cfg.canonical))}};
  doc["config"] = cfg.canonical;
  doc["rows"] = rows;
  doc["summary"] = summary;
  doc["violations"] = out.violations;
  // the hash covers every field above; the timestamp is deliberately outside
  doc["report_hash"] = hex64(fnv1a(doc.dump()));
  doc["timestamp"] = utc_timestamp();
  out.document = std::move(doc);
  out.exit_code = (opts.accept && !out.violations.empty()) ? 2 : 0;
  return out;
}

int run_from_file(const std::string& config_path, const std::vector<std::string>& overrides,
                  const RunOptions& opts, std::ostream& log) {
  try {
    RawConfig raw = RawConfig::from_file(config_path);
    for (const auto& o : overrides) raw.set(o);
    const ExperimentConfig cfg = resolve_config(raw);
    const RunReport rep = run_experiment(cfg, opts);

    namespace fs = std::filesystem;
    fs::create_directories(opts.out_dir);
    const fs::path json_path =
        fs::path(opts.out_dir) /
        (cfg.json_name.empty() ? cfg.experiment + ".json" : cfg.json_name);
    std::ofstream json_out(json_path);
    json_out << rep.document.dump(2) << "\n";
    if (!json_out)
      throw std::runtime_error("cannot write report file '" + json_path.string() + "'");
    if (!cfg.csv_name.empty() && !rep.csv_text.empty()) {
      const fs::path csv_path = fs::path(opts.out_dir) / cfg.csv_name;
      std::ofstream csv_out(csv_path);
      csv_out << rep.csv_text;
      if (!csv_out)
        throw std::runtime_error("cannot write table file '" + csv_path.string() + "'");
    }

    for (const auto& v : rep.violations) log << "FLAG " << v << "\n";
    log << "report " << json_path.string() << " hash "
        << rep.document["report_hash"].get<std::string>() << "\n";
    return rep.exit_code;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

std::string list_builtins() {
  auto block = [](const char* title, const std::vector<std::string>& names) {
    std::string out = title;
    out += ":";
    for (const auto& n : names) out += " " + n;
    out += "\n";
    return out;
  };
  return block("charts", chart_names()) + block("fields", field_names()) +
         block("curve families", curve_family_names()) +
         block("experiments", experiment_names());
}

}  // namespace holonomy
