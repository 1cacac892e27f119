#pragma once

// Scenario files in, CSV trajectories and a JSON report out.
//
// Exit codes: 0 success, 2 invalid scenario, 3 run stopped at a singularity
// (artifacts are still written and marked truncated).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "deform_cs/algebra_core.hpp"
#include "deform_cs/closed_forms.hpp"
#include "deform_cs/continuous_flows.hpp"
#include "deform_cs/dda_registry.hpp"
#include "deform_cs/discrete_flows.hpp"
#include "deform_cs/errors.hpp"
#include "deform_cs/reductions.hpp"

namespace dcs {

inline constexpr std::string_view kToolName = "deform-cs";
inline constexpr std::string_view kToolVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitSingular = 3;

using Json = nlohmann::ordered_json;

/// Scenario parse failure; the message names the offending field.
class ScenarioError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

enum class ScenarioKind { flow, map, validate_family, residual_scan, reduction };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::flow: return "flow";
    case ScenarioKind::map: return "map";
    case ScenarioKind::validate_family: return "validate_family";
    case ScenarioKind::residual_scan: return "residual_scan";
    case ScenarioKind::reduction: return "reduction";
  }
  return "?";
}

enum class ReductionKind { chazy, boussinesq, elliptic };

struct Tolerances {
  double residual = 1e-6;
  double drift = 1e-8;
};

struct ScenarioConfig {
  Json raw;
  ScenarioKind kind = ScenarioKind::flow;
  std::string name;
  double step = 1e-3;
  Tolerances tol;

  // flow
  FlowSystem system = FlowSystem::L2a_2x2;
  double s0 = 0.0, s1 = 1.0;
  Entries initial;

  // map
  DdaId dda = DdaId::L4;
  std::optional<Entries> previous;
  long steps = 0;

  // validate_family
  FamilySpec family;
  std::vector<double> points;
  double h = 1e-4;

  // residual_scan
  SampledField field;

  // reduction
  ReductionKind reduction = ReductionKind::chazy;
  ChazyVariant variant = ChazyVariant::ChazyV;
  ChazyState chazy;
  BoussinesqParams boussinesq;
  BoussinesqState boussinesq0;
  double alpha = 0.0;
  EllipticState elliptic;
  double end = 1.0;
};

namespace scenario_detail {

[[noreturn]] inline void fail(const std::string& field, const std::string& what) {
  throw ScenarioError("field '" + field + "': " + what);
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const Json& require(const Json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(join(path, key), "missing");
  return obj.at(key);
}

inline double number(const Json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(field, "must be finite");
  return d;
}

inline double number_at(const Json& obj, const std::string& path, const std::string& key) {
  return number(require(obj, path, key), join(path, key));
}

inline double number_or(const Json& obj, const std::string& path, const std::string& key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), join(path, key)) : fallback;
}

inline double positive_or(const Json& obj, const std::string& path, const std::string& key, double fallback) {
  const double v = number_or(obj, path, key, fallback);
  if (!(v > 0.0)) fail(join(path, key), "must be positive");
  return v;
}

inline std::string string_at(const Json& obj, const std::string& path, const std::string& key) {
  const Json& v = require(obj, path, key);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  return v.get<std::string>();
}

template <class Parse>
auto parse_id(const Json& obj, const std::string& path, const std::string& key, Parse parse) {
  const std::string s = string_at(obj, path, key);
  try {
    return parse(s);
  } catch (const InvalidInput& e) {
    fail(join(path, key), e.what());
  }
}

inline const Json& object_at(const Json& obj, const std::string& path, const std::string& key) {
  const Json& v = require(obj, path, key);
  if (!v.is_object()) fail(join(path, key), "expected an object");
  return v;
}

/// Entries from {"B": 1, "E": 0, ...}; unnamed entries default to 0.
inline Entries entries_at(const Json& obj, const std::string& path, const std::string& key, int n) {
  const Json& v = object_at(obj, path, key);
  Entries e;
  e.n = n;
  const std::string here = join(path, key);
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string& name = it.key();
    if (name.size() != 1 || e.names().find(name[0]) == std::string_view::npos) {
      fail(join(here, name), "unknown structure constant for size " + std::to_string(n));
    }
    e[name[0]] = number(it.value(), join(here, name));
  }
  return e;
}

inline std::pair<double, double> span_at(const Json& obj, const std::string& path, const std::string& key) {
  const Json& v = require(obj, path, key);
  const std::string f = join(path, key);
  if (!v.is_array() || v.size() != 2) fail(f, "expected [start, end]");
  const double a = number(v[0], f + "[0]"), b = number(v[1], f + "[1]");
  if (!(b > a)) fail(f, "end must exceed start");
  return {a, b};
}

inline std::vector<double> numbers_at(const Json& obj, const std::string& path, const std::string& key) {
  const Json& v = require(obj, path, key);
  const std::string f = join(path, key);
  if (!v.is_array() || v.empty()) fail(f, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], f + "[" + std::to_string(i) + "]"));
  return out;
}

inline Mat matrix_at(const Json& v, const std::string& f) {
  if (!v.is_array() || v.empty()) fail(f, "expected a square matrix as an array of rows");
  const auto n = static_cast<Eigen::Index>(v.size());
  if (n > 3) fail(f, "matrices are at most 3x3");
  Mat m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) fail(f, "expected a square matrix");
    for (Eigen::Index c = 0; c < n; ++c) {
      m(r, c) = number(row[static_cast<std::size_t>(c)], f + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline GridVariable parse_grid_variable(const std::string& s) {
  if (s == "x") return GridVariable::x;
  if (s == "log_x") return GridVariable::log_x;
  if (s == "lattice") return GridVariable::lattice;
  throw InvalidInput("unknown grid variable '" + s + "'");
}

inline SampledField field_at(const Json& obj, const std::string& path, const std::string& key) {
  const Json& v = object_at(obj, path, key);
  const std::string f = join(path, key);
  SampledField field;
  field.variable = v.contains("grid_variable") ? parse_id(v, f, "grid_variable", parse_grid_variable) : GridVariable::x;
  field.grid = numbers_at(v, f, "grid");
  const Json& vals = require(v, f, "values");
  if (!vals.is_array()) fail(join(f, "values"), "expected an array");
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const std::string fi = join(f, "values") + "[" + std::to_string(i) + "]";
    if (!vals[i].is_object()) fail(fi, "expected {\"C1\": ..., \"C2\": ...}");
    MatrixPair p;
    p.C1 = matrix_at(require(vals[i], fi, "C1"), join(fi, "C1"));
    p.C2 = matrix_at(require(vals[i], fi, "C2"), join(fi, "C2"));
    p.n = static_cast<int>(p.C1.rows());
    try {
      p.validate();
    } catch (const InvalidInput& e) {
      fail(fi, e.what());
    }
    field.values.push_back(std::move(p));
  }
  try {
    field.validate();
  } catch (const InvalidInput& e) {
    fail(f, e.what());
  }
  return field;
}

inline NamedValues params_at(const Json& obj, const std::string& path, const std::string& key) {
  NamedValues out;
  if (!obj.contains(key)) return out;
  const Json& v = object_at(obj, path, key);
  for (auto it = v.begin(); it != v.end(); ++it) out.set(it.key(), number(it.value(), join(join(path, key), it.key())));
  return out;
}

inline GaugePotentials potentials_at(const Json& obj, const std::string& path, const std::string& key) {
  const Json& v = require(obj, path, key);
  const std::string f = join(path, key);
  if (!v.is_array() || v.size() != 3) fail(f, "expected three coefficient arrays");
  GaugePotentials phi;
  for (std::size_t m = 0; m < 3; ++m) {
    const std::string fm = f + "[" + std::to_string(m) + "]";
    if (!v[m].is_array() || v[m].empty()) fail(fm, "expected a non-empty coefficient array");
    for (std::size_t i = 0; i < v[m].size(); ++i) phi[m].coeffs.push_back(number(v[m][i], fm + "[" + std::to_string(i) + "]"));
  }
  return phi;
}

inline long steps_at(const Json& obj, const std::string& path, const std::string& key) {
  const Json& v = require(obj, path, key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  const long n = v.get<long>();
  if (n < 0 || n > 100000000) fail(join(path, key), "must be between 0 and 1e8");
  return n;
}

}  // namespace scenario_detail

/// Parses and validates a scenario document.
inline ScenarioConfig parse_scenario(const Json& doc) {
  using namespace scenario_detail;
  if (!doc.is_object()) fail("<root>", "expected a JSON object");
  ScenarioConfig c;
  c.raw = doc;
  const std::string kind = string_at(doc, "", "kind");
  if (kind == "flow") c.kind = ScenarioKind::flow;
  else if (kind == "map") c.kind = ScenarioKind::map;
  else if (kind == "validate_family") c.kind = ScenarioKind::validate_family;
  else if (kind == "residual_scan") c.kind = ScenarioKind::residual_scan;
  else if (kind == "reduction") c.kind = ScenarioKind::reduction;
  else fail("kind", "unknown kind '" + kind + "'");

  if (doc.contains("name")) c.name = string_at(doc, "", "name");
  c.step = positive_or(doc, "", "step", 1e-3);
  if (doc.contains("tolerances")) {
    const Json& t = object_at(doc, "", "tolerances");
    c.tol.residual = positive_or(t, "tolerances", "residual", c.tol.residual);
    c.tol.drift = positive_or(t, "tolerances", "drift", c.tol.drift);
  }

  switch (c.kind) {
    case ScenarioKind::flow: {
      c.system = parse_id(doc, "", "system", [](const std::string& s) { return parse_flow_system(s); });
      c.initial = entries_at(doc, "", "initial", matrix_size(c.system));
      std::tie(c.s0, c.s1) = span_at(doc, "", "span");
      try {
        validate_flow_state(c.system, FlowState{c.s0, c.initial});
      } catch (const Error& e) {
        fail("initial", e.what());
      }
      break;
    }
    case ScenarioKind::map: {
      c.dda = parse_id(doc, "", "dda", [](const std::string& s) { return parse_dda(s); });
      if (!lookup(c.dda).discrete) fail("dda", "dda " + std::string(to_string(c.dda)) + " has no discrete map");
      int n = 2;
      if (doc.contains("size")) {
        const Json& sz = doc.at("size");
        if (!sz.is_number_integer() || (sz.get<int>() != 2 && sz.get<int>() != 3)) fail("size", "must be 2 or 3");
        n = sz.get<int>();
      }
      c.initial = entries_at(doc, "", "initial", n);
      if (doc.contains("previous")) c.previous = entries_at(doc, "", "previous", n);
      if (c.dda == DdaId::L5 && !c.previous) fail("previous", "L5 needs the previous site");
      c.steps = steps_at(doc, "", "steps");
      try {
        make_map_state(c.initial, 0, c.previous);
      } catch (const InvalidInput& e) {
        fail("initial", e.what());
      }
      break;
    }
    case ScenarioKind::validate_family: {
      const FamilyId id = parse_id(doc, "", "family", [](const std::string& s) { return parse_family(s); });
      GaugePotentials phi;
      if (id == FamilyId::GaugeL5) phi = potentials_at(doc, "", "potentials");
      try {
        c.family = make_family(id, params_at(doc, "", "params"), phi);
      } catch (const InvalidInput& e) {
        fail("params", e.what());
      }
      c.points = numbers_at(doc, "", "points");
      c.h = positive_or(doc, "", "h", 1e-4);
      break;
    }
    case ScenarioKind::residual_scan: {
      c.dda = parse_id(doc, "", "dda", [](const std::string& s) { return parse_dda(s); });
      if (!lookup(c.dda).deforms) fail("dda", "L1 generates no deformation");
      c.field = field_at(doc, "", "field");
      const bool lattice = c.field.variable == GridVariable::lattice;
      if (lookup(c.dda).discrete != lattice) fail("field.grid_variable", "does not match the dda (lattice for shift DDAs)");
      break;
    }
    case ScenarioKind::reduction: {
      const std::string r = string_at(doc, "", "reduction");
      if (r == "chazy") {
        c.reduction = ReductionKind::chazy;
        c.variant = parse_id(doc, "", "variant", [](const std::string& s) { return parse_chazy_variant(s); });
        const Json& in = object_at(doc, "", "initial");
        c.chazy.y = number_or(in, "initial", "y", 0.0);
        c.chazy.g = number_at(in, "initial", "g");
        c.chazy.g1 = number_or(in, "initial", "g1", 0.0);
        c.chazy.g2 = number_or(in, "initial", "g2", 0.0);
        c.chazy.b = number_or(in, "initial", "b", 0.0);
        if (c.variant == ChazyVariant::ChazyIII) {
          if (c.chazy.g == 0.0) fail("initial.g", "Chazy III needs G != 0");
          c.chazy.w = c.chazy.g * c.chazy.g * number_or(in, "initial", "phi", 0.0);
        }
        c.end = number_at(doc, "", "end");
        if (!(c.end > c.chazy.y)) fail("end", "must exceed initial.y");
      } else if (r == "boussinesq") {
        c.reduction = ReductionKind::boussinesq;
        const NamedValues p = params_at(doc, "", "params");
        c.boussinesq = {p.get("alpha", 0.0), p.get("beta", 0.0), p.get("gamma", 0.0)};
        const Json& in = object_at(doc, "", "initial");
        c.boussinesq0 = {number_or(in, "initial", "s", 0.0), number_at(in, "initial", "e"), number_or(in, "initial", "e1", 0.0)};
        c.end = number_at(doc, "", "end");
        if (!(c.end > c.boussinesq0.s)) fail("end", "must exceed initial.s");
      } else if (r == "elliptic") {
        c.reduction = ReductionKind::elliptic;
        c.alpha = number_at(doc, "", "alpha");
        const Json& in = object_at(doc, "", "initial");
        const double y = number_or(in, "initial", "y", 0.0);
        try {
          c.elliptic = elliptic_point(number_at(in, "initial", "e"), c.alpha, number_or(in, "initial", "sign", 1.0), y);
        } catch (const InvalidInput& e) {
          fail("initial.e", e.what());
        }
        c.end = number_at(doc, "", "end");
        if (!(c.end > y)) fail("end", "must exceed initial.y");
      } else {
        fail("reduction", "unknown reduction '" + r + "'");
      }
      break;
    }
  }
  return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("field '<file>': cannot read " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ScenarioError(std::string("field '<file>': invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

// ---------------------------------------------------------------------------
// Results, CSV and report
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<std::string>> tags;  // trailing text columns, optional

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t i = 0; i < rows[r].size(); ++i) out << (i ? "," : "") << format_number(rows[r][i]);
      if (r < tags.size()) {
        for (const auto& t : tags[r]) out << ',' << t;
      }
      out << '\n';
    }
  }
};

struct DriftStats {
  double initial = 0.0;
  double final_value = 0.0;
  std::optional<double> max_abs;
  std::optional<double> max_rel;
};

/// Drift of each named quantity from its first value. With fewer than two
/// samples the drift fields stay empty.
inline std::vector<std::pair<std::string, DriftStats>> drift_stats(const std::vector<NamedValues>& series) {
  std::vector<std::pair<std::string, DriftStats>> out;
  if (series.empty()) return out;
  for (const auto& [name, v0] : series.front()) {
    DriftStats d;
    d.initial = v0;
    d.final_value = v0;
    if (series.size() > 1) {
      double worst = 0.0;
      for (std::size_t i = 1; i < series.size(); ++i) {
        if (!series[i].contains(name)) continue;
        const double v = series[i].at(name);
        worst = std::max(worst, std::abs(v - v0));
        d.final_value = v;
      }
      d.max_abs = worst;
      if (v0 != 0.0) d.max_rel = worst / std::abs(v0);
    }
    out.emplace_back(name, d);
  }
  return out;
}

struct RunResult {
  int exit_code = kExitOk;
  bool truncated = false;
  std::string diagnostic;
  long samples = 0;
  ResidualReport residuals;
  std::vector<NamedValues> invariants;
  std::vector<std::pair<std::string, Table>> tables;
  Json extra = Json::object();
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// The report document. Field order is fixed; only "generated_at" varies
/// between identical runs.
inline Json report(const ScenarioConfig& cfg, const RunResult& r, const std::string& timestamp = utc_timestamp()) {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["generated_at"] = timestamp;
  j["scenario"] = cfg.raw;
  j["effective"] = {{"kind", to_string(cfg.kind)}, {"step", cfg.step}};
  j["status"] = r.truncated ? "truncated" : "ok";
  j["exit_code"] = r.exit_code;
  j["diagnostic"] = r.diagnostic.empty() ? Json(nullptr) : Json(r.diagnostic);
  j["samples"] = r.samples;
  Json res = Json::object();
  for (std::size_t i = 0; i < r.residuals.labels.size(); ++i) res[r.residuals.labels[i]] = r.residuals.norms[i];
  j["residuals"] = res;
  j["max_residual"] = r.residuals.labels.empty() ? Json(nullptr) : Json(r.residuals.max_norm());
  Json integrals = Json::object();
  for (const auto& [k, v] : r.residuals.integrals) integrals[k] = v;
  j["integrals"] = integrals;
  Json drift = Json::object();
  bool drift_ok = true;
  for (const auto& [name, d] : drift_stats(r.invariants)) {
    drift[name] = {{"initial", d.initial},
                   {"final", d.final_value},
                   {"max_abs", optional_number(d.max_abs)},
                   {"max_rel", optional_number(d.max_rel)}};
    const std::optional<double> measure = d.max_rel ? d.max_rel : d.max_abs;
    if (measure && *measure > cfg.tol.drift) drift_ok = false;
  }
  j["drift"] = drift;
  j["checks"] = {{"residual_tolerance", cfg.tol.residual},
                 {"residual_ok", r.residuals.labels.empty() || r.residuals.max_norm() <= cfg.tol.residual},
                 {"drift_tolerance", cfg.tol.drift},
                 {"drift_ok", drift_ok}};
  j["details"] = r.extra;
  Json files = Json::array();
  for (const auto& [file, t] : r.tables) files.push_back(file);
  files.push_back("report.json");
  j["artifacts"] = files;
  return j;
}

namespace run_detail {

inline void append_spectrum(NamedValues& nv, const Spectrum& ev) {
  for (std::size_t k = 0; k < ev.size(); ++k) {
    nv.set("lambda" + std::to_string(k + 1) + ".re", ev[k].real());
    nv.set("lambda" + std::to_string(k + 1) + ".im", ev[k].imag());
  }
}

inline void add_field_residual(RunResult& r, DdaId dda, const SampledField& f, const std::string& label) {
  try {
    r.residuals.add(label, cs_residual_max(lookup(dda), f));
  } catch (const OutOfRange&) {
    // too few samples for the stencil; nothing to report
  }
}

inline RunResult run_flow(const ScenarioConfig& c) {
  RunResult r;
  const Trajectory t = integrate(c.system, FlowState{c.s0, c.initial}, c.s0, c.s1, c.step);
  r.truncated = t.truncated;
  r.diagnostic = t.diagnostic;
  r.samples = static_cast<long>(t.size());
  Table tab;
  tab.header = {"index", "s", "x"};
  for (char ch : c.initial.names()) tab.header.emplace_back(1, ch);
  for (std::size_t i = 0; i < t.size(); ++i) {
    NamedValues inv = t.integrals[i];
    append_spectrum(inv, t.spectra[i]);
    if (i == 0) {
      for (const auto& [k, v] : inv) tab.header.push_back(k);
    }
    std::vector<double> row{static_cast<double>(i), t.states[i].s, t.x_at(i)};
    for (char ch : c.initial.names()) row.push_back(t.states[i].entries[ch]);
    for (const auto& [k, v] : inv) row.push_back(v);
    tab.rows.push_back(std::move(row));
    r.invariants.push_back(std::move(inv));
  }
  add_field_residual(r, dda_of(c.system), sampled_field(t), std::string(to_string(dda_of(c.system))) + ".sampled.frobenius");
  r.tables.emplace_back("trajectory.csv", std::move(tab));
  return r;
}

inline RunResult run_map(const ScenarioConfig& c) {
  RunResult r;
  const Orbit o = iterate(c.dda, make_map_state(c.initial, 0, c.previous), c.steps);
  r.truncated = o.truncated;
  r.diagnostic = o.diagnostic;
  r.samples = static_cast<long>(o.size());
  Table tab;
  tab.header = {"n"};
  for (char ch : c.initial.names()) tab.header.emplace_back(1, ch);
  const NamedValues& first = o.invariants.front();
  for (const auto& [k, v] : first) tab.header.push_back(k);
  tab.header.insert(tab.header.end(), {"det_degenerate", "eg_degenerate"});
  SampledField f;
  f.variable = GridVariable::lattice;
  for (std::size_t i = 0; i < o.size(); ++i) {
    const MapState& s = o.states[i];
    std::vector<double> row{static_cast<double>(s.n)};
    for (char ch : c.initial.names()) row.push_back(s.entries[ch]);
    for (const auto& [k, v] : first) row.push_back(o.invariants[i].get(k, std::nan("")));
    tab.rows.push_back(std::move(row));
    tab.tags.push_back({s.det_degenerate ? "1" : "0", s.eg_degenerate ? "1" : "0"});
    f.grid.push_back(static_cast<double>(s.n));
    f.values.push_back(s.pair());
  }
  // The L5 residual also needs the site before the initial one.
  if (c.dda == DdaId::L5 && c.previous) {
    f.grid.insert(f.grid.begin(), -1.0);
    f.values.insert(f.values.begin(), MatrixPair::from_entries(*c.previous));
  }
  add_field_residual(r, c.dda, f, std::string(to_string(c.dda)) + ".lattice.frobenius");
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (!o.invariants[i].empty()) r.invariants.push_back(o.invariants[i]);
  }
  r.extra["final"] = Json::object();
  for (char ch : c.initial.names()) r.extra["final"][std::string(1, ch)] = o.states.back().entries[ch];
  r.tables.emplace_back("orbit.csv", std::move(tab));
  return r;
}

inline RunResult run_validate_family(const ScenarioConfig& c) {
  RunResult r;
  r.residuals = validate_family(c.family, c.points, c.h);
  r.samples = static_cast<long>(c.points.size());
  Table tab;
  tab.header = {"point", "residual"};
  for (std::size_t i = 0; i < c.points.size(); ++i) tab.rows.push_back({c.points[i], r.residuals.norms[i]});
  r.tables.emplace_back("residuals.csv", std::move(tab));
  return r;
}

inline RunResult run_residual_scan(const ScenarioConfig& c) {
  RunResult r;
  const DdaSpec spec = lookup(c.dda);
  Table tab;
  tab.header = {"index", "grid", "frobenius", "max_abs"};
  for (std::size_t i = 0; i < c.field.values.size(); ++i) {
    try {
      const Mat m = cs_residual_matrix(spec, c.field, i);
      tab.rows.push_back({static_cast<double>(i), c.field.grid[i], frobenius(m), m.cwiseAbs().maxCoeff()});
    } catch (const OutOfRange&) {
      // boundary sample without a full stencil
    }
  }
  r.samples = static_cast<long>(tab.rows.size());
  if (tab.rows.empty()) throw OutOfRange("field has no sample with a full stencil");
  double worst = 0.0;
  for (const auto& row : tab.rows) worst = std::max(worst, row[2]);
  r.residuals.add(std::string(to_string(c.dda)) + ".frobenius", worst);
  r.tables.emplace_back("residuals.csv", std::move(tab));
  return r;
}

template <class State, class Row>
Table scalar_table(const ScalarTrajectory<State>& t, std::vector<std::string> header, Row row) {
  Table tab;
  tab.header = std::move(header);
  if (!t.invariants.empty()) {
    for (const auto& [k, v] : t.invariants.front()) tab.header.push_back(k);
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::vector<double> values = row(t.states[i]);
    for (const auto& [k, v] : t.invariants[i]) values.push_back(v);
    tab.rows.push_back(std::move(values));
  }
  return tab;
}

inline RunResult run_reduction(const ScenarioConfig& c) {
  RunResult r;
  SampledField f;
  DdaId dda = DdaId::L2a;
  switch (c.reduction) {
    case ReductionKind::chazy: {
      const ChazyTrajectory t = chazy_integrate(c.variant, c.chazy, c.end, c.step);
      r.truncated = t.truncated;
      r.diagnostic = t.diagnostic;
      r.samples = static_cast<long>(t.size());
      r.invariants = t.invariants;
      f.variable = GridVariable::log_x;
      f.free_entries = {"B", "C"};
      Table tab = scalar_table(t, {"y", "G", "G1", "G2", "B", "W", "E", "M", "N"}, [&](const ChazyState& s) {
        const Entries e = reconstruct_from_g(c.variant, s);
        return std::vector<double>{s.y, s.g, s.g1, s.g2, s.b, s.w, e.E, e.M, e.N};
      });
      for (const auto& s : t.states) {
        f.grid.push_back(s.y);
        f.values.push_back(MatrixPair::from_entries(reconstruct_from_g(c.variant, s)));
      }
      r.extra["variant"] = to_string(c.variant);
      r.extra["phi"] = phi_spec(c.variant);
      r.tables.emplace_back("reduction.csv", std::move(tab));
      break;
    }
    case ReductionKind::boussinesq: {
      const BoussinesqTrajectory t = boussinesq_integrate(c.boussinesq0, c.boussinesq, c.end, c.step);
      r.truncated = t.truncated;
      r.diagnostic = t.diagnostic;
      r.samples = static_cast<long>(t.size());
      r.invariants = t.invariants;
      f.variable = GridVariable::log_x;
      f.free_entries = {"A", "B", "C"};
      Table tab = scalar_table(t, {"s", "E", "E1"}, [](const BoussinesqState& s) {
        return std::vector<double>{s.s, s.e, s.e1};
      });
      for (const auto& s : t.states) {
        f.grid.push_back(s.s);
        f.values.push_back(MatrixPair::from_entries(boussinesq_companions(s.e, s.e1, c.boussinesq)));
      }
      r.tables.emplace_back("reduction.csv", std::move(tab));
      break;
    }
    case ReductionKind::elliptic: {
      const EllipticTrajectory t = elliptic_integrate(c.elliptic, c.alpha, c.end, c.step);
      r.truncated = t.truncated;
      r.diagnostic = t.diagnostic;
      r.samples = static_cast<long>(t.size());
      dda = DdaId::L3;
      f.variable = GridVariable::x;  // det C1 = 1 on the constraint, so x = y
      f.free_entries = {"M", "N"};
      Table tab = scalar_table(t, {"y", "B", "E", "C"}, [](const EllipticState& s) {
        return std::vector<double>{s.y, s.b, s.e, s.c};
      });
      double r1 = 0.0, r2 = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        r1 = std::max(r1, std::abs(t.invariants[i].at("r1")));
        r2 = std::max(r2, std::abs(t.invariants[i].at("r2")));
        f.grid.push_back(t.states[i].y);
        f.values.push_back(MatrixPair::from_entries(elliptic_entries(t.states[i])));
      }
      r.residuals.add("elliptic.first_order.max_abs", r1);
      r.residuals.add("elliptic.second_integral.max_abs", r2);
      r.tables.emplace_back("reduction.csv", std::move(tab));
      break;
    }
  }
  add_field_residual(r, dda, f, std::string(to_string(dda)) + ".sampled.frobenius");
  return r;
}

}  // namespace run_detail

/// Runs a parsed scenario without touching the file system.
inline RunResult execute(const ScenarioConfig& cfg) {
  RunResult r;
  try {
    switch (cfg.kind) {
      case ScenarioKind::flow: r = run_detail::run_flow(cfg); break;
      case ScenarioKind::map: r = run_detail::run_map(cfg); break;
      case ScenarioKind::validate_family: r = run_detail::run_validate_family(cfg); break;
      case ScenarioKind::residual_scan: r = run_detail::run_residual_scan(cfg); break;
      case ScenarioKind::reduction: r = run_detail::run_reduction(cfg); break;
    }
  } catch (const SingularGauge& e) {
    r = RunResult{};
    r.truncated = true;
    r.diagnostic = e.what();
  } catch (const SingularFlow& e) {
    r = RunResult{};
    r.truncated = true;
    r.diagnostic = e.what();
  } catch (const SingularOrbit& e) {
    r = RunResult{};
    r.truncated = true;
    r.diagnostic = e.what();
  }
  r.exit_code = r.truncated ? kExitSingular : kExitOk;
  return r;
}

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::optional<Json> report;
};

/// Full pipeline for one scenario file: parse, apply the step override,
/// execute, write the tables and report.json into `out_dir`.
inline RunOutcome run(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                      std::optional<double> step_override = std::nullopt) {
  ScenarioConfig cfg;
  try {
    cfg = load_scenario(scenario);
    if (step_override) {
      if (!(*step_override > 0.0) || !std::isfinite(*step_override)) throw ScenarioError("field 'step': must be positive");
      cfg.step = *step_override;
    }
  } catch (const InvalidInput& e) {
    return {kExitInvalid, e.what(), std::nullopt};
  }
  RunResult r;
  try {
    r = execute(cfg);
  } catch (const InvalidInput& e) {
    return {kExitInvalid, e.what(), std::nullopt};
  } catch (const OutOfRange& e) {
    return {kExitInvalid, e.what(), std::nullopt};
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& [file, t] : r.tables) t.write(out_dir / file);
  Json doc = report(cfg, r);
  std::ofstream(out_dir / "report.json") << doc.dump(2) << '\n';
  std::string msg = r.truncated ? "truncated: " + r.diagnostic : "ok";
  return {r.exit_code, msg, std::move(doc)};
}

}  // namespace dcs
