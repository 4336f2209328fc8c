#include "holonomy/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "holonomy/algebra.hpp"

namespace holonomy {

namespace {

std::string at_position(const std::string& origin, int line, int column,
                        const std::string& message) {
  return origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message;
}

[[noreturn]] void fail_at(const std::string& origin, int line, int column,
                          const std::string& message) {
  throw ConfigError(at_position(origin, line, column, message));
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

std::vector<double> parse_doubles(const RawConfig& raw, const RawConfig::Entry& e,
                                  const std::string& what, size_t expected = 0) {
  std::istringstream in(e.value);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  std::string rest;
  if (!(in >> rest).eof() || out.empty())
    fail_at(raw.origin(), e.line, e.column, "expected numbers for " + what + ", got '" + e.value + "'");
  if (expected && out.size() != expected)
    fail_at(raw.origin(), e.line, e.column,
            what + " needs " + std::to_string(expected) + " numbers, got " +
                std::to_string(out.size()));
  return out;
}

double parse_double(const RawConfig& raw, const RawConfig::Entry& e, const std::string& what) {
  return parse_doubles(raw, e, what, 1)[0];
}

long parse_integer(const RawConfig& raw, const RawConfig::Entry& e, const std::string& what) {
  const double v = parse_double(raw, e, what);
  const long n = static_cast<long>(v);
  if (static_cast<double>(n) != v)
    fail_at(raw.origin(), e.line, e.column, what + " must be an integer, got '" + e.value + "'");
  return n;
}

// shortest round-trippable decimal form, so canonical text re-parses exactly
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back;
  std::sscanf(buf, "%lg", &back);
  if (back == v) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.15g", v);
    std::sscanf(shorter, "%lg", &back);
    if (back == v) return shorter;
  }
  return buf;
}

std::string fmt(const std::vector<double>& vs) {
  std::string out;
  for (double v : vs) {
    if (!out.empty()) out += " ";
    out += fmt(v);
  }
  return out;
}

Vec4 unit(int mu) { return Vec4::Unit(mu); }

}  // namespace

RawConfig RawConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return from_string(text.str(), path);
}

RawConfig RawConfig::from_string(const std::string& text, const std::string& origin) {
  RawConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw_line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const size_t hash = raw_line.find('#');
    std::string line = trim(hash == std::string::npos ? raw_line : raw_line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail_at(origin, line_no, 1, "unterminated section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail_at(origin, line_no, 1, "empty section name");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail_at(origin, line_no, 1, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail_at(origin, line_no, 1, "empty key");
    if (section.empty())
      fail_at(origin, line_no, 1, "key '" + key + "' appears before any [section]");
    const int column = static_cast<int>(raw_line.find(key)) + 1;
    if (cfg.sections_[section].count(key))
      fail_at(origin, line_no, column, "duplicate key '" + key + "' in [" + section + "]");
    cfg.sections_[section][key] = Entry{trim(line.substr(eq + 1)), line_no, column};
    cfg.order_[section].push_back(key);
  }
  return cfg;
}

bool RawConfig::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const RawConfig::Entry* RawConfig::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

const RawConfig::Entry& RawConfig::at(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) throw ConfigError(origin_ + ": missing required key '" + key + "' in [" + section + "]");
  return *e;
}

std::vector<std::string> RawConfig::keys(const std::string& section) const {
  const auto it = order_.find(section);
  return it == order_.end() ? std::vector<std::string>{} : it->second;
}

void RawConfig::set(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  const size_t dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  if (section.empty() || key.empty())
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  if (!sections_[section].count(key)) order_[section].push_back(key);
  sections_[section][key] = Entry{trim(assignment.substr(eq + 1)), 0, 0};
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"selfdual-report", "laplacian", "oracle-check",
                                                 "scan", "lemma-diagnostics"};
  return names;
}

const std::vector<std::string>& chart_names() {
  static const std::vector<std::string> names = {"flat", "s4_stereographic"};
  return names;
}

const std::vector<std::string>& field_names() {
  static const std::vector<std::string> names = {"zero", "abelian_constant", "bpst", "perturbed"};
  return names;
}

const std::vector<std::string>& curve_family_names() {
  static const std::vector<std::string> names = {"line", "circle", "figure_eight", "spline",
                                                 "split_line"};
  return names;
}

// the pinned probe curves; labels are the family names
Curve builtin_curve(const std::string& family) {
  if (family == "line") return Curve::line({0.2, -0.1, 0.3, 0.1}, {-0.3, 0.4, -0.2, 0.5});
  if (family == "circle") return Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, unit(0), unit(2));
  if (family == "figure_eight")
    return Curve::figure_eight({-0.2, 0.1, 0.2, -0.1}, 0.35, unit(1), 0.25, unit(3));
  if (family == "spline")
    return Curve::spline({{0.0, 0.0, 0.0, 0.0},
                          {0.3, 0.2, -0.1, 0.1},
                          {0.1, 0.5, 0.2, -0.2},
                          {-0.2, 0.3, 0.4, 0.1},
                          {0.0, 0.1, 0.1, 0.4}});
  if (family == "split_line")
    return reparametrize(Curve::line({0.4, 0.0, -0.2, 0.1}, {-0.1, 0.3, 0.2, -0.3}),
                         split_linear_time_change(0.3));
  throw UnknownNameError("unknown curve family '" + family + "' (valid: " +
                         join(curve_family_names()) + ")");
}

namespace {

void check_name(const RawConfig& raw, const RawConfig::Entry& e, const std::string& what,
                const std::vector<std::string>& valid) {
  if (std::find(valid.begin(), valid.end(), e.value) == valid.end())
    throw UnknownNameError(at_position(raw.origin(), e.line, e.column,
                                       "unknown " + what + " '" + e.value + "' (valid: " +
                                           join(valid) + ")"));
}

So4Element from_coefficients(const std::vector<double>& c) {
  Mat4 m = Mat4::Zero();
  for (int i = 0; i < 3; ++i) {
    m += c[i] * left_basis()[i].matrix();
    m += c[3 + i] * right_basis()[i].matrix();
  }
  return So4Element(m);
}

double default_tolerance(const std::string& experiment, const std::string& chart) {
  if (experiment == "selfdual-report") return chart == "flat" ? 1e-10 : 1e-8;
  if (experiment == "oracle-check") return 1e-6;
  return 1e-6;  // vanishing gates: laplacian, scan, lemma-diagnostics
}

}  // namespace

ExperimentConfig resolve_config(const RawConfig& raw) {
  ExperimentConfig cfg;

  const auto& exp = raw.at("experiment", "name");
  check_name(raw, exp, "experiment", experiment_names());
  cfg.experiment = exp.value;

  cfg.chart_name = "flat";
  if (const auto* e = raw.find("chart", "name")) {
    check_name(raw, *e, "chart", chart_names());
    cfg.chart_name = e->value;
  }
  cfg.chart = cfg.chart_name == "flat" ? flat_chart() : s4_chart();

  // field block: name plus the parameters its family consumes
  const auto& fname = raw.at("field", "name");
  check_name(raw, fname, "field", field_names());
  cfg.field_name = fname.value;
  double rho = 1.0, epsilon = 0.1;
  Vec4 center = Vec4::Zero();
  std::vector<double> coeff = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  if (const auto* e = raw.find("field", "rho")) rho = parse_double(raw, *e, "rho");
  if (const auto* e = raw.find("field", "center")) {
    const auto v = parse_doubles(raw, *e, "center", 4);
    center = Vec4(v[0], v[1], v[2], v[3]);
  }
  if (const auto* e = raw.find("field", "epsilon")) epsilon = parse_double(raw, *e, "epsilon");
  if (const auto* e = raw.find("field", "coefficients"))
    coeff = parse_doubles(raw, *e, "coefficients", 6);
  if (const auto* e = raw.find("field", "orientation")) {
    check_name(raw, *e, "orientation", {"antidual", "dual"});
    cfg.field_orientation = e->value == "dual" ? Orientation::dual : Orientation::antidual;
  }
  cfg.field = builtin_field(cfg.field_name, rho, center, cfg.field_orientation,
                            from_coefficients(coeff), epsilon);

  // curves: label = family rows, defaulting to the whole builtin zoo
  std::vector<std::pair<std::string, std::string>> curve_families;
  for (const auto& key : raw.keys("curves")) {
    const auto& e = raw.at("curves", key);
    check_name(raw, e, "curve family", curve_family_names());
    curve_families.emplace_back(key, e.value);
  }
  if (curve_families.empty())
    for (const auto& family : curve_family_names()) curve_families.emplace_back(family, family);
  for (const auto& [label, family] : curve_families)
    cfg.curves.emplace_back(label, builtin_curve(family));

  // rotations: label = 3 left + 3 right coefficients, defaulting to the basis
  std::vector<std::pair<std::string, std::vector<double>>> rotation_coeffs;
  for (const auto& key : raw.keys("rotations"))
    rotation_coeffs.emplace_back(
        key, parse_doubles(raw, raw.at("rotations", key), "rotation coefficients", 6));
  if (rotation_coeffs.empty()) {
    const char* names[6] = {"e1", "e2", "e3", "f1", "f2", "f3"};
    for (int i = 0; i < 6; ++i) {
      std::vector<double> c(6, 0.0);
      c[i] = 1.0;
      rotation_coeffs.emplace_back(names[i], c);
    }
  }
  for (const auto& [label, c] : rotation_coeffs)
    cfg.rotations.emplace_back(label, from_coefficients(c));

  if (const auto* e = raw.find("experiment", "n"))
    cfg.transport.n = static_cast<int>(parse_integer(raw, *e, "n"));
  if (cfg.transport.n < 2)
    throw ConfigError(raw.origin() + ": transport step count n must be at least 2");
  if (const auto* e = raw.find("experiment", "scheme")) {
    check_name(raw, *e, "scheme", {"rk4", "magnus2"});
    cfg.transport.scheme =
        e->value == "rk4" ? TransportOptions::Scheme::rk4 : TransportOptions::Scheme::magnus2;
  }
  if (const auto* e = raw.find("experiment", "reproject_every"))
    cfg.transport.reproject_every = static_cast<int>(parse_integer(raw, *e, "reproject_every"));
  if (const auto* e = raw.find("experiment", "seed")) {
    const long s = parse_integer(raw, *e, "seed");
    if (s < 0) fail_at(raw.origin(), e->line, e->column, "seed must be non-negative");
    cfg.seed = static_cast<unsigned>(s);
  }
  cfg.tolerance = default_tolerance(cfg.experiment, cfg.chart_name);
  if (const auto* e = raw.find("experiment", "tolerance"))
    cfg.tolerance = parse_double(raw, *e, "tolerance");
  if (const auto* e = raw.find("experiment", "fault")) {
    check_name(raw, *e, "fault", {"none", "kernel-sign-flip"});
    if (e->value != "none") cfg.fault = e->value;
  }

  if (const auto* e = raw.find("output", "json")) cfg.json_name = e->value;
  if (const auto* e = raw.find("output", "csv")) cfg.csv_name = e->value;

  // canonical re-serialization: every resolved value materialized, sections
  // and keys in fixed order, numbers in round-trippable form
  std::ostringstream out;
  out << "[chart]\nname = " << cfg.chart_name << "\n\n";
  out << "[curves]\n";
  for (const auto& [label, family] : curve_families) out << label << " = " << family << "\n";
  out << "\n[experiment]\n";
  if (!cfg.fault.empty()) out << "fault = " << cfg.fault << "\n";
  out << "n = " << cfg.transport.n << "\n";
  out << "name = " << cfg.experiment << "\n";
  out << "reproject_every = " << cfg.transport.reproject_every << "\n";
  out << "scheme = " << (cfg.transport.scheme == TransportOptions::Scheme::rk4 ? "rk4" : "magnus2")
      << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "tolerance = " << fmt(cfg.tolerance) << "\n";
  out << "\n[field]\n";
  if (cfg.field_name == "abelian_constant") out << "coefficients = " << fmt(coeff) << "\n";
  if (cfg.field_name == "bpst" || cfg.field_name == "perturbed") {
    out << "center = " << fmt({center[0], center[1], center[2], center[3]}) << "\n";
    if (cfg.field_name == "perturbed") out << "epsilon = " << fmt(epsilon) << "\n";
  }
  out << "name = " << cfg.field_name << "\n";
  if (cfg.field_name == "bpst" || cfg.field_name == "perturbed") {
    out << "orientation = "
        << (cfg.field_orientation == Orientation::dual ? "dual" : "antidual") << "\n";
    out << "rho = " << fmt(rho) << "\n";
  }
  if (!cfg.json_name.empty() || !cfg.csv_name.empty()) {
    out << "\n[output]\n";
    if (!cfg.csv_name.empty()) out << "csv = " << cfg.csv_name << "\n";
    if (!cfg.json_name.empty()) out << "json = " << cfg.json_name << "\n";
  }
  out << "\n[rotations]\n";
  for (const auto& [label, c] : rotation_coeffs) out << label << " = " << fmt(c) << "\n";
  cfg.canonical = out.str();
  return cfg;
}

}  // namespace holonomy
