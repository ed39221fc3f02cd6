#pragma once

// JSON run configuration. Physical parameters have no defaults: every
// missing or malformed field raises ConfigError naming its dotted path.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlscm/decay_harness.hpp"
#include "nlscm/dispersive_probe.hpp"
#include "nlscm/error.hpp"
#include "nlscm/evolution.hpp"
#include "nlscm/linear_hamiltonian.hpp"
#include "nlscm/nonlinearity.hpp"

namespace nlscm {

using nlohmann::json;

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object", path_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError("missing required field " + field(key), field(key));
    return j_.at(key);
  }

  Reader child(const std::string& key) const { return Reader(raw(key), field(key)); }

  double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key) + " must be a number", field(key));
    return v.get<double>();
  }
  double positive(const std::string& key) const {
    const double v = number(key);
    if (!(v > 0)) throw ConfigError(field(key) + " must be positive", field(key));
    return v;
  }
  std::int64_t integer(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(field(key) + " must be an integer", field(key));
    return v.get<std::int64_t>();
  }
  std::string text(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key) + " must be a string", field(key));
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(field(key) + " must be an array of numbers", field(key));
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(field(key) + " must be an array of numbers", field(key));
      out.push_back(x.get<double>());
    }
    return out;
  }
  std::pair<double, double> interval(const std::string& key) const {
    const auto v = numbers(key);
    if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError(field(key) + " must be [lo, hi] with lo < hi", field(key));
    return {v[0], v[1]};
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const noexcept { return path_; }
  const json& value() const noexcept { return j_; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
};

inline Absorber read_absorber(const Reader& r) {
  Absorber a;
  a.r_start = r.positive("r_start");
  a.strength = r.number("strength");
  a.power = static_cast<int>(r.integer("power"));
  if (a.strength < 0) throw ConfigError(r.field("strength") + " must be nonnegative", r.field("strength"));
  return a;
}

}  // namespace detail

enum class InitialKind { bound_state_plus_radiation, pure_radiation, file };

struct InitialDataSpec {
  InitialKind kind = InitialKind::bound_state_plus_radiation;
  double a0 = 0;                   ///< amplitude on the manifold
  double radiation_amplitude = 0;  ///< ||seed||_2
  double radiation_width = 0;      ///< Gaussian width of the seed before P_c
  std::string path;                ///< binary field file for kind = file
};

struct BranchConfig {
  double a_max = 0;
  int steps = 0;
  double residual_tolerance = 0;
};

struct AnalysisConfig {
  std::vector<double> exponents;  ///< p values whose ||r||_p are recorded (p1, p2 added automatically)
  DecayTolerances tolerances;
  double settle_band = 0;
  double sigma = 0;
  std::vector<double> curve;  ///< p list for the exponent curve; empty to skip
};

struct PropagatorProbeConfig {
  double amplitude = 0;  ///< frozen-path |a|
  bool shadowing = false;
  double s = 0;
  double sigma = 0;
  double p = 0;
  double q2 = 0;
  std::vector<double> short_times;
  int refinements = 0;
  double exponent_tolerance = 0;
  ProbeSettings settings;
};

struct Budgets {
  double amplitude = 0;       ///< bound on ||u0||_2
  double weighted_sup = 0;    ///< bound on sup <r>^{4 sigma} psi_E
  double sigma = 0;
};

struct RunConfig {
  std::string name;
  GridSpec grid{4, 1.0, 2};
  PotentialSpec potential;
  std::optional<NonlinearitySpec> nonlinearity;
  std::optional<BranchConfig> branch;
  std::optional<EvolutionConfig> evolution;
  std::optional<InitialDataSpec> initial;
  std::optional<AnalysisConfig> analysis;
  std::optional<PropagatorProbeConfig> probe;
  std::optional<Budgets> budgets;
  std::uint64_t seed = 0;
  std::vector<std::string> stages;
  json source;  ///< the parsed document, for hashing and manifests
};

inline const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> s{"spectrum", "branch", "evolve", "decompose", "fit", "probe"};
  return s;
}

inline RunConfig parse_run_config(const json& doc) {
  using detail::Reader;
  const Reader root(doc, "");
  RunConfig c;
  c.source = doc;
  c.name = root.text("name");
  {
    const Reader g = root.child("grid");
    const auto dim = g.integer("dimension");
    if (dim != 4 && dim != 5) throw ConfigError("grid.dimension must be 4 or 5", "grid.dimension");
    const auto points = g.integer("points");
    if (points < 3) throw ConfigError("grid.points must be at least 3", "grid.points");
    c.grid = GridSpec(static_cast<int>(dim), g.positive("r_max"), points);
  }
  {
    const Reader v = root.child("potential");
    c.potential.form = potential_form_from_string(v.text("form"));
    c.potential.depth = v.positive("depth");
    c.potential.width = v.positive("width");
  }
  if (root.has("nonlinearity")) {
    const json& terms = root.raw("nonlinearity");
    if (!terms.is_array() || terms.empty())
      throw ConfigError("nonlinearity must be a non-empty array of {lambda, alpha}", "nonlinearity");
    std::vector<PowerTerm> t;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const Reader term(terms[k], "nonlinearity[" + std::to_string(k) + "]");
      t.push_back({term.number("lambda"), term.number("alpha")});
    }
    c.nonlinearity = NonlinearitySpec(c.grid.dim(), t);
  }
  if (root.has("branch")) {
    const Reader b = root.child("branch");
    BranchConfig bc;
    bc.a_max = b.positive("a_max");
    bc.steps = static_cast<int>(b.integer("steps"));
    if (bc.steps < 2) throw ConfigError("branch.steps must be at least 2", "branch.steps");
    bc.residual_tolerance = b.positive("residual_tolerance");
    c.branch = bc;
  }
  if (root.has("evolution")) {
    const Reader e = root.child("evolution");
    EvolutionConfig ec;
    ec.dt = e.positive("dt");
    ec.T = e.positive("T");
    ec.frame_stride = e.integer("frame_stride");
    ec.scheme = scheme_from_string(e.text("scheme"));
    ec.absorber = detail::read_absorber(e.child("absorber"));
    ec.validate(c.grid);
    c.evolution = ec;
  }
  if (root.has("initial_data")) {
    const Reader d = root.child("initial_data");
    InitialDataSpec s;
    const std::string kind = d.text("kind");
    if (kind == "bound_state_plus_radiation") {
      s.kind = InitialKind::bound_state_plus_radiation;
      s.a0 = d.number("a0");
      if (s.a0 < 0) throw ConfigError("initial_data.a0 must be nonnegative", "initial_data.a0");
      s.radiation_amplitude = d.number("radiation_amplitude");
      s.radiation_width = d.positive("radiation_width");
    } else if (kind == "pure_radiation") {
      s.kind = InitialKind::pure_radiation;
      s.radiation_amplitude = d.positive("radiation_amplitude");
      s.radiation_width = d.positive("radiation_width");
    } else if (kind == "file") {
      s.kind = InitialKind::file;
      s.path = d.text("path");
    } else {
      throw ConfigError("unknown initial_data.kind '" + kind + "'", "initial_data.kind");
    }
    c.initial = s;
  }
  if (root.has("analysis")) {
    const Reader a = root.child("analysis");
    AnalysisConfig ac;
    ac.exponents = a.numbers("exponents");
    ac.tolerances.exponent = a.positive("exponent_tolerance");
    ac.tolerances.growth_factor = a.positive("growth_factor");
    ac.tolerances.flat_spread = a.positive("flat_spread");
    ac.tolerances.fit_window = a.interval("fit_window");
    ac.settle_band = a.positive("settle_band");
    ac.sigma = a.positive("sigma");
    if (a.has("curve")) ac.curve = a.numbers("curve");
    for (double p : ac.exponents)
      if (!(p >= 2)) throw ConfigError("analysis.exponents must be >= 2", "analysis.exponents");
    c.analysis = ac;
  }
  if (root.has("probe")) {
    const Reader p = root.child("probe");
    PropagatorProbeConfig pc;
    pc.amplitude = p.number("amplitude");
    pc.shadowing = p.has("shadowing") && p.raw("shadowing").get<bool>();
    pc.s = p.number("s");
    pc.sigma = p.positive("sigma");
    pc.p = p.positive("p");
    pc.q2 = p.positive("q2");
    pc.short_times = p.numbers("short_times");
    pc.refinements = static_cast<int>(p.integer("refinements"));
    pc.exponent_tolerance = p.positive("exponent_tolerance");
    pc.settings.dt = p.positive("dt");
    pc.settings.T = p.positive("T");
    pc.settings.frame_stride = p.integer("frame_stride");
    pc.settings.samples = static_cast<int>(p.integer("samples"));
    pc.settings.data_width = p.positive("data_width");
    pc.settings.fit_window = p.interval("fit_window");
    pc.settings.absorber = detail::read_absorber(p.child("absorber"));
    pc.settings.validate(c.grid);
    c.probe = pc;
  }
  if (root.has("budgets")) {
    const Reader b = root.child("budgets");
    Budgets bu;
    bu.amplitude = b.positive("amplitude");
    bu.weighted_sup = b.positive("weighted_sup");
    bu.sigma = b.positive("sigma");
    c.budgets = bu;
  }
  c.seed = static_cast<std::uint64_t>(root.integer("seed"));
  if (c.probe) c.probe->settings.seed = c.seed;

  if (root.has("stages")) {
    const json& st = root.raw("stages");
    if (!st.is_array()) throw ConfigError("stages must be an array of stage names", "stages");
    for (const auto& s : st) {
      const std::string name = s.is_string() ? s.get<std::string>() : "";
      if (std::find(known_stages().begin(), known_stages().end(), name) == known_stages().end())
        throw ConfigError("unknown stage '" + name + "'", "stages");
      c.stages.push_back(name);
    }
  } else {
    c.stages = {"spectrum"};
  }

  // Stage prerequisites.
  auto wants = [&](const std::string& s) { return std::find(c.stages.begin(), c.stages.end(), s) != c.stages.end(); };
  auto need = [&](bool present, const char* field, const char* stage) {
    if (!present) throw ConfigError(std::string("stage '") + stage + "' requires field " + field, field);
  };
  if (wants("branch") || wants("evolve") || wants("decompose") || wants("fit") || wants("probe")) {
    need(c.nonlinearity.has_value(), "nonlinearity", "branch");
    need(c.branch.has_value(), "branch", "branch");
  }
  if (wants("evolve") || wants("decompose") || wants("fit")) {
    need(c.evolution.has_value(), "evolution", "evolve");
    need(c.initial.has_value(), "initial_data", "evolve");
  }
  if (wants("decompose") || wants("fit")) need(c.analysis.has_value(), "analysis", "decompose");
  if (wants("probe")) need(c.probe.has_value(), "probe", "probe");
  if (wants("probe") && c.probe->shadowing) {
    need(c.evolution.has_value(), "evolution", "probe");
    need(c.initial.has_value(), "initial_data", "probe");
    need(c.analysis.has_value(), "analysis", "probe");
  }
  if (c.branch && c.initial && c.initial->a0 > c.branch->a_max)
    throw ConfigError("initial_data.a0 exceeds branch.a_max", "initial_data.a0");
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path, "--config");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + " is not valid JSON: " + e.what(), "--config");
  }
}

inline RunConfig load_run_config(const std::string& path) {
  try {
    return parse_run_config(read_json_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

}  // namespace nlscm
