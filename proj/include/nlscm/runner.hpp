#pragma once

// Staged experiment pipeline. Each stage writes its files and a manifest
// keyed by a content hash of its inputs; a stage whose manifest matches is
// skipped. A failing stage leaves a FAILED record next to partial outputs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "nlscm/config.hpp"
#include "nlscm/decay_harness.hpp"
#include "nlscm/dispersive_probe.hpp"
#include "nlscm/evolution.hpp"
#include "nlscm/ground_state_manifold.hpp"
#include "nlscm/modulation.hpp"
#include "nlscm/persistence.hpp"
#include "nlscm/propagator.hpp"

namespace nlscm {

inline constexpr const char* kVersion = "1.0.0";

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string content_hash(const json& j) { return content_hash(j.dump()); }

inline void write_json_file(const std::filesystem::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw FormatError("cannot open " + p.string() + " for writing");
  os << j.dump(2) << '\n';
}

inline void to_json(json& j, const ModulationTrace& tr) {
  json norms = json::object();
  for (const auto& [p, v] : tr.r_norms) {
    std::ostringstream key;
    key.precision(17);
    key << p;
    norms[key.str()] = v;
  }
  std::vector<double> re, im;
  for (const cplx& a : tr.a) {
    re.push_back(a.real());
    im.push_back(a.imag());
  }
  std::vector<json> ode;
  for (double x : tr.ode_residual) ode.push_back(std::isnan(x) ? json(nullptr) : json(x));
  j = {{"times", tr.times}, {"re_a", re},         {"im_a", im},         {"E", tr.E},
       {"r_norms", norms},  {"orth", tr.orth_residual}, {"ode", ode},  {"rhs_modulus", tr.rhs_modulus},
       {"u0_norm", tr.u0_norm}};
}

inline void from_json(const json& j, ModulationTrace& tr) {
  tr.times = j.at("times").get<std::vector<double>>();
  const auto re = j.at("re_a").get<std::vector<double>>();
  const auto im = j.at("im_a").get<std::vector<double>>();
  tr.a.clear();
  for (std::size_t k = 0; k < re.size(); ++k) tr.a.emplace_back(re[k], im[k]);
  tr.E = j.at("E").get<std::vector<double>>();
  tr.r_norms.clear();
  for (const auto& [key, v] : j.at("r_norms").items()) tr.r_norms[std::stod(key)] = v.get<std::vector<double>>();
  tr.orth_residual = j.at("orth").get<std::vector<double>>();
  tr.ode_residual.clear();
  for (const auto& x : j.at("ode")) tr.ode_residual.push_back(x.is_null() ? std::nan("") : x.get<double>());
  tr.rhs_modulus = j.at("rhs_modulus").get<std::vector<double>>();
  tr.u0_norm = j.at("u0_norm").get<double>();
}

struct StageRecord {
  std::string stage;
  std::string key;
  bool cached = false;
  double seconds = 0;
  std::vector<std::string> files;
};

struct RunResult {
  ExitCode exit = ExitCode::ok;
  std::filesystem::path dir;
  std::vector<StageRecord> stages;
  std::vector<VerificationReport> reports;
  std::string error;
};

class Runner {
 public:
  Runner(RunConfig cfg, std::filesystem::path out) : cfg_(std::move(cfg)), out_(std::move(out)) {}

  /// Runs the requested stages and their prerequisites.
  RunResult run(const std::vector<std::string>& requested) {
    std::filesystem::create_directories(out_);
    result_.dir = out_;
    const std::vector<std::string> order = known_stages();
    std::vector<std::string> todo;
    for (const auto& s : order)
      if (std::find(requested.begin(), requested.end(), s) != requested.end()) todo.push_back(s);
    std::string current;
    try {
      for (const auto& s : todo) {
        current = s;
        ensure(s);
      }
      std::filesystem::remove(out_ / "FAILED");
    } catch (const Error& e) {
      fail(current, e.kind(), e.what());
      result_.exit = e.exit_code();
      result_.error = e.what();
      return result_;
    } catch (const std::exception& e) {
      fail(current, "internal", e.what());
      result_.exit = ExitCode::numeric_failure;
      result_.error = e.what();
      return result_;
    }
    for (const auto& r : result_.reports)
      if (!r.pass()) result_.exit = ExitCode::acceptance_failure;
    return result_;
  }

  RunResult run() { return run(cfg_.stages); }

 private:
  // --- keys -------------------------------------------------------------
  json pick(std::initializer_list<const char*> keys) const {
    json j = json::object();
    for (const char* k : keys)
      if (cfg_.source.contains(k)) j[k] = cfg_.source.at(k);
    return j;
  }

  std::string key_of(const std::string& stage) const {
    json j;
    if (stage == "spectrum") j = pick({"grid", "potential"});
    else if (stage == "branch") j = {{"up", key_of("spectrum")}, {"own", pick({"nonlinearity", "branch"})}};
    else if (stage == "evolve") j = {{"up", key_of("branch")}, {"own", pick({"evolution", "initial_data", "budgets"})}};
    else if (stage == "decompose") j = {{"up", key_of("evolve")}, {"own", pick({"analysis"})}};
    else if (stage == "fit") j = {{"up", key_of("decompose")}, {"own", pick({"analysis", "budgets"})}};
    else if (stage == "probe") {
      j = {{"up", key_of("branch")}, {"own", pick({"probe", "seed"})}};
      if (cfg_.probe && cfg_.probe->shadowing) j["trace"] = key_of("decompose");
    }
    j["version"] = kVersion;
    j["stage"] = stage;
    return content_hash(j);
  }

  std::filesystem::path manifest_path(const std::string& stage) const { return out_ / ("manifest_" + stage + ".json"); }

  bool cached(const std::string& stage, const std::string& key) const {
    const auto mp = manifest_path(stage);
    if (!std::filesystem::exists(mp)) return false;
    try {
      std::ifstream is(mp);
      const json m = json::parse(is);
      if (m.at("key").get<std::string>() != key) return false;
      for (const auto& f : m.at("files"))
        if (!std::filesystem::exists(out_ / f.get<std::string>())) return false;
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }

  void fail(const std::string& stage, const std::string& kind, const std::string& msg) {
    json rec = {{"stage", stage}, {"kind", kind}, {"message", msg}};
    try {
      write_json_file(out_ / "FAILED", rec);
    } catch (...) {
    }
  }

  // --- stage driver ---------------------------------------------------------
  void ensure(const std::string& stage) {
    if (done_.count(stage)) return;
    if (stage == "branch") ensure("spectrum");
    else if (stage == "evolve") ensure("branch");
    else if (stage == "decompose") ensure("evolve");
    else if (stage == "fit") ensure("decompose");
    else if (stage == "probe") {
      ensure("branch");
      if (cfg_.probe && cfg_.probe->shadowing) ensure("decompose");
    }
    StageRecord rec;
    rec.stage = stage;
    rec.key = key_of(stage);
    const auto t0 = std::chrono::steady_clock::now();
    if (cached(stage, rec.key)) {
      rec.cached = true;
      load_cached(stage);
    } else {
      std::filesystem::remove(manifest_path(stage));
      rec.files = execute(stage);
      json m = {{"stage", stage},
                {"key", rec.key},
                {"config_hash", content_hash(cfg_.source)},
                {"version", kVersion},
                {"seed", cfg_.seed},
                {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                {"files", rec.files}};
      write_json_file(manifest_path(stage), m);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result_.stages.push_back(rec);
    done_.insert(stage);
  }

  void load_cached(const std::string& stage) {
    if (stage == "spectrum") spectrum_ = std::make_shared<SpectralData>(load_spectrum((out_ / "spectrum.bin").string()));
    else if (stage == "branch") branch_ = std::make_shared<const BoundStateBranch>(load_branch((out_ / "branch.bin").string()));
    else if (stage == "decompose") {
      std::ifstream is(out_ / "trace.json");
      trace_ = json::parse(is).get<ModulationTrace>();
    } else if (stage == "fit" || stage == "probe") {
      std::ifstream is(out_ / (stage == "fit" ? "report.json" : "probe.json"));
      const json j = json::parse(is);
      for (const auto& r : j.at("reports")) result_.reports.push_back(report_from_json(r));
    }
  }

  static VerificationReport report_from_json(const json& j) {
    VerificationReport r;
    r.label = j.at("label").get<std::string>();
    for (const auto& c : j.at("clauses")) {
      Clause cl;
      cl.name = c.at("clause").get<std::string>();
      cl.predicted = c.at("predicted").is_number() ? c.at("predicted").get<double>() : 0.0;
      cl.measured = c.at("measured").is_number() ? c.at("measured").get<double>() : 0.0;
      cl.tolerance = c.at("tolerance").is_number() ? c.at("tolerance").get<double>() : 0.0;
      cl.pass = c.at("pass").get<bool>();
      cl.informative = c.value("informative", false);
      r.clauses.push_back(cl);
    }
    return r;
  }

  std::vector<std::string> execute(const std::string& stage) {
    if (stage == "spectrum") return stage_spectrum();
    if (stage == "branch") return stage_branch();
    if (stage == "evolve") return stage_evolve();
    if (stage == "decompose") return stage_decompose();
    if (stage == "fit") return stage_fit();
    return stage_probe();
  }

  std::vector<std::string> stage_spectrum() {
    spectrum_ = std::make_shared<SpectralData>(solve_ground_eigenpair(cfg_.potential, cfg_.grid));
    save_spectrum((out_ / "spectrum.bin").string(), *spectrum_);
    write_json_file(out_ / "spectrum.json", {{"E0", spectrum_->E0},
                                             {"second_eigenvalue", spectrum_->second_eigenvalue},
                                             {"residual", spectrum_->residual},
                                             {"psi0_at_origin", spectrum_->psi0[0].real()}});
    return {"spectrum.bin", "spectrum.json"};
  }

  std::vector<std::string> stage_branch() {
    ContinuationOptions opt;
    opt.residual_tolerance = cfg_.branch->residual_tolerance;
    branch_ = std::make_shared<const BoundStateBranch>(
        continue_branch(spectrum_, *cfg_.nonlinearity, cfg_.branch->a_max, cfg_.branch->steps, opt));
    save_branch((out_ / "branch.bin").string(), *branch_);
    std::ofstream os(out_ / "branch.csv");
    os.precision(17);
    os << "a,E,residual,h_L2,C_A,C_lower\n";
    for (const auto& n : branch_->nodes()) {
      os << n.a << ',' << n.E << ',' << n.newton_residual << ',' << lp_norm(n.h, 2.0);
      if (n.a > 0) {
        const auto d = check_exponential_decay(n, -n.E / 2.0);
        os << ',' << d.C_A << ',' << d.C_lower << '\n';
      } else {
        os << ",,\n";
      }
    }
    return {"branch.bin", "branch.csv"};
  }

  RadialField initial_data() const {
    const auto& d = *cfg_.initial;
    if (d.kind == InitialKind::file) {
      RadialField u = load_binary(d.path);
      require_same_grid(cfg_.grid, u.grid());
      return u;
    }
    RadialField seed = project_continuous(
        *spectrum_, RadialField::from_function(cfg_.grid, [&](double r) {
          return std::exp(-r * r / (d.radiation_width * d.radiation_width));
        }));
    seed *= d.radiation_amplitude / lp_norm(seed, 2.0);
    if (d.kind == InitialKind::pure_radiation) return seed;
    return eval_manifold(*branch_, d.a0).psi + seed;
  }

  std::vector<double> recorded_exponents() const {
    std::vector<double> ps = cfg_.analysis ? cfg_.analysis->exponents : std::vector<double>{};
    if (cfg_.analysis)
      for (double p : cfg_.analysis->curve) ps.push_back(p);
    const auto cls = classify(*cfg_.nonlinearity);
    ps.push_back(cls.p1);
    ps.push_back(cls.p2);
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    return ps;
  }

  std::vector<std::string> stage_evolve() {
    const RadialField u0 = initial_data();
    TrajectoryWriter traj((out_ / "trajectory.bin").string());
    std::vector<double> ps = {2.0};
    for (double p : recorded_exponents()) ps.push_back(p);
    NormSummaryWriter norms((out_ / "norms.csv").string(), ps, cfg_.evolution->absorber.r_start);
    evolve(u0, spectrum_->hamiltonian, *cfg_.nonlinearity, *cfg_.evolution, [&](const TrajectoryFrame& f) {
      traj.write(f);
      norms.write(f);
    });
    traj.close();
    return {"trajectory.bin", "norms.csv"};
  }

  std::vector<std::string> stage_decompose() {
    const auto frames = load_trajectory((out_ / "trajectory.bin").string());
    ModulationAnalyzer an(*branch_, recorded_exponents(), cfg_.evolution->absorber.r_start);
    for (const auto& f : frames) an.consume(f);
    trace_ = an.take();
    write_json_file(out_ / "trace.json", trace_);
    const auto cls = classify(*cfg_.nonlinearity);
    write_trace_csv((out_ / "modulation.csv").string(), trace_, cls.p1, cls.p2);
    const AsymptoticReport ar = asymptotic_report(trace_, *branch_, cfg_.analysis->settle_band);
    write_json_file(out_ / "asymptotic.json",
                    {{"settled", ar.settled},
                     {"tail_oscillation", ar.tail_oscillation},
                     {"a_inf", ar.a_inf},
                     {"E_inf", ar.E_inf},
                     {"convergence_exponent", std::isnan(ar.convergence_exponent) ? json(nullptr) : json(ar.convergence_exponent)},
                     {"convergence_window", {ar.convergence_window.first, ar.convergence_window.second}},
                     {"theta_times", ar.theta_times},
                     {"theta", ar.theta}});
    return {"trace.json", "modulation.csv", "asymptotic.json"};
  }

  std::vector<std::string> stage_fit() {
    const auto cls = classify(*cfg_.nonlinearity);
    const auto& an = *cfg_.analysis;
    std::vector<VerificationReport> reps;
    reps.push_back(verify_radiation_decay(trace_, cls, an.tolerances));
    if (!an.curve.empty()) reps.push_back(verify_exponent_curve(trace_, cls, an.curve, an.tolerances));

    VerificationReport inv;
    inv.label = "decomposition invariants";
    double max_a = 0, max_orth = 0;
    for (std::size_t k = 0; k < trace_.size(); ++k) {
      max_a = std::max(max_a, std::abs(trace_.a[k]));
      max_orth = std::max(max_orth, trace_.orth_residual[k]);
    }
    inv.clauses.push_back({"amplitude bound", trace_.u0_norm, max_a, 1e-10, max_a <= trace_.u0_norm + 1e-10, false, ""});
    inv.clauses.push_back({"orthogonality", 0.0, max_orth, 1e-10 * trace_.u0_norm, max_orth <= 1e-10 * trace_.u0_norm, false, ""});
    if (cfg_.budgets) {
      const auto& b = *cfg_.budgets;
      inv.clauses.push_back({"amplitude budget", b.amplitude, trace_.u0_norm, 0.0, trace_.u0_norm <= b.amplitude, false, ""});
      double sup = 0;
      for (const cplx& a : trace_.a) {
        const double mod = std::min(std::abs(a), branch_->extent());
        BranchPoint pt;
        pt.psi = real_part(eval_manifold(*branch_, mod).psi);
        sup = std::max(sup, check_smallness(pt, b.sigma));
      }
      inv.clauses.push_back({"weighted smallness budget", b.weighted_sup, sup, 0.0, sup <= b.weighted_sup, false, ""});
    }
    reps.push_back(inv);

    json out = {{"classification",
                 {{"case", cls.case_id},
                  {"p1", cls.p1},
                  {"p2", cls.p2},
                  {"threshold", std::isfinite(cls.p_threshold) ? json(cls.p_threshold) : json(nullptr)},
                  {"predicted_p1", cls.predicted_p1},
                  {"predicted_p2", cls.predicted_p2},
                  {"log_factor", cls.log_factor}}},
                {"reports", reps}};
    out["pass"] = std::all_of(reps.begin(), reps.end(), [](const VerificationReport& r) { return r.pass(); });
    write_json_file(out_ / "report.json", out);
    std::ofstream csv(out_ / "summary.csv");
    csv.precision(10);
    csv << "report,clause,predicted,measured,tolerance,pass,informative\n";
    for (const auto& r : reps)
      for (const auto& c : r.clauses)
        csv << '"' << r.label << "\",\"" << c.name << "\"," << c.predicted << ',' << c.measured << ',' << c.tolerance << ','
            << c.pass << ',' << c.informative << '\n';
    for (auto& r : reps) result_.reports.push_back(std::move(r));
    return {"report.json", "summary.csv"};
  }

  std::vector<std::string> stage_probe() {
    const auto& pc = *cfg_.probe;
    const int dim = cfg_.grid.dim();
    const LinearizationPath path = pc.shadowing ? LinearizationPath::shadowing(branch_, trace_)
                                                : LinearizationPath::frozen(branch_, pc.amplitude);
    const std::vector<ProbePair> pairs{
        {ProbePair::Operator::omega, NormSpace::weighted(pc.sigma), NormSpace::weighted(-pc.sigma)},
        {ProbePair::Operator::omega, NormSpace::weighted(pc.sigma), NormSpace::lebesgue(pc.p)},
        {ProbePair::Operator::omega, NormSpace::lebesgue(2.0), NormSpace::lebesgue(2.0)},
        {ProbePair::Operator::t_operator, NormSpace::lebesgue(2.0), NormSpace::weighted(-pc.sigma)},
        {ProbePair::Operator::t_operator, NormSpace::lebesgue(conjugate_exponent(pc.q2)), NormSpace::weighted(-pc.sigma)}};
    const auto res = probe_decay(path, pc.s, pairs, pc.settings, pc.refinements);

    std::ofstream csv(out_ / "probe.csv");
    csv.precision(17);
    csv << "operator,source,target,t_minus_s,ratio\n";
    for (std::size_t i = 0; i < pairs.size(); ++i)
      for (std::size_t k = 0; k < res.traces[i].times.size(); ++k)
        csv << (pairs[i].op == ProbePair::Operator::omega ? "Omega" : "T") << ',' << pairs[i].source.label() << ','
            << pairs[i].target.label() << ',' << res.traces[i].times[k] << ',' << res.traces[i].values[k] << '\n';

    VerificationReport rep;
    rep.label = std::string("propagator probes (") + (pc.shadowing ? "shadowing" : "frozen") + " path)";
    json fits = json::array();
    auto fit_clause = [&](std::size_t i, const std::string& name, double predicted) {
      const ExponentFit f = fit_exponent(res.traces[i], false);
      fits.push_back({{"pair", res.traces[i].label}, {"exponent", f.exponent}, {"amplitude", f.amplitude},
                      {"residual_rms", f.residual_rms}, {"window", {f.window.first, f.window.second}}});
      rep.clauses.push_back(detail::exponent_clause(name, f, predicted, pc.exponent_tolerance));
    };
    fit_clause(0, "weighted decay", dim / 2.0);
    fit_clause(1, "weighted to L^p decay", dim * (0.5 - 1.0 / pc.p));
    {
      const auto& tr = res.traces[2];
      double full = 0, half = 0;
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        full = std::max(full, tr.values[k]);
        if (tr.times[k] <= 0.5 * pc.settings.T) half = std::max(half, tr.values[k]);
      }
      rep.clauses.push_back({"L2 bound stable under doubling", 1.0, full / half, 1.05, full / half < 1.05, false, ""});
    }
    {
      const auto& tr = res.traces[3];
      double full = 0, half = 0;
      for (std::size_t k = 1; k < tr.times.size(); ++k) {
        const double d = 0.5 * (tr.values[k] * tr.values[k] + tr.values[k - 1] * tr.values[k - 1]) * (tr.times[k] - tr.times[k - 1]);
        full += d;
        if (tr.times[k] <= 0.5 * pc.settings.T) half += d;
      }
      const double incr = full > 0 ? (full - half) / full : 0.0;
      rep.clauses.push_back({"T square-integrable in time", 0.0, incr, 0.1, incr < 0.1, false, ""});
    }
    if (!pc.short_times.empty()) {
      const ProbePair pair{ProbePair::Operator::t_operator, NormSpace::lebesgue(conjugate_exponent(pc.q2)),
                           NormSpace::lebesgue(pc.q2)};
      const DecayTrace st = probe_short_time(path, pc.s, pair, pc.short_times, pc.settings);
      std::vector<double> x, y;
      for (std::size_t k = 0; k < st.times.size(); ++k) {
        x.push_back(std::log(st.times[k]));
        y.push_back(std::log(st.values[k]));
      }
      const double slope = detail::least_squares_line(x, y).slope;
      const double predicted = -(dim * (1.0 - 2.0 / pc.q2) - 1.0);
      rep.clauses.push_back({"short-time T slope", predicted, slope, 0.35, std::abs(slope - predicted) <= 0.35, false, ""});
    }
    rep.clauses.push_back({"range drift", 0.0, res.max_range_drift, 1e-6, res.max_range_drift < 1e-6, false, ""});
    write_json_file(out_ / "probe.json", {{"fits", fits}, {"reports", json::array({rep})}, {"pass", rep.pass()}});
    result_.reports.push_back(rep);
    return {"probe.csv", "probe.json"};
  }

  RunConfig cfg_;
  std::filesystem::path out_;
  RunResult result_;
  std::set<std::string> done_;
  std::shared_ptr<SpectralData> spectrum_;
  std::shared_ptr<const BoundStateBranch> branch_;
  ModulationTrace trace_;
};

inline RunResult run(const RunConfig& cfg, const std::filesystem::path& out) { return Runner(cfg, out).run(); }

struct SuiteEntry {
  std::string name;
  std::string hash;
  ExitCode exit = ExitCode::ok;
  bool pass = false;
  std::string dir;
  std::string reused_from;
  std::string error;
};

/// Runs every config in its own subdirectory, several at a time. Entries
/// with identical content hash reuse the first run's artifacts.
inline std::vector<SuiteEntry> suite(const std::vector<RunConfig>& matrix, const std::filesystem::path& out,
                                     unsigned workers = std::max(1u, std::thread::hardware_concurrency())) {
  std::vector<SuiteEntry> entries(matrix.size());
  std::map<std::string, std::size_t> first;
  std::vector<std::size_t> unique;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    json keyed = matrix[i].source;
    keyed.erase("name");
    entries[i].name = matrix[i].name;
    entries[i].hash = content_hash(keyed);
    if (first.emplace(entries[i].hash, i).second) unique.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < unique.size();) {
      SuiteEntry& e = entries[unique[k]];
      const auto dir = out / (e.name + "-" + e.hash.substr(0, 8));
      const RunResult r = run(matrix[unique[k]], dir);
      e.exit = r.exit;
      e.pass = r.exit == ExitCode::ok;
      e.dir = dir.string();
      e.error = r.error;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < std::min<std::size_t>(workers, unique.size()); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const SuiteEntry& f = entries[first.at(entries[i].hash)];
    if (&f == &entries[i]) continue;
    entries[i].exit = f.exit;
    entries[i].pass = f.pass;
    entries[i].dir = f.dir;
    entries[i].reused_from = f.name;
  }

  std::filesystem::create_directories(out);
  json agg = json::array();
  for (const auto& e : entries) {
    json j = {{"name", e.name}, {"hash", e.hash}, {"exit_code", static_cast<int>(e.exit)}, {"pass", e.pass}, {"dir", e.dir}};
    if (!e.reused_from.empty()) j["reused_from"] = e.reused_from;
    if (!e.error.empty()) j["error"] = e.error;
    agg.push_back(j);
  }
  std::size_t passed = 0;
  for (const auto& e : entries) passed += e.pass;
  write_json_file(out / "suite.json", {{"entries", agg}, {"total", entries.size()}, {"passed", passed}});
  return entries;
}

inline ExitCode suite_exit(const std::vector<SuiteEntry>& entries) {
  ExitCode worst = ExitCode::ok;
  for (const auto& e : entries) {
    if (e.exit == ExitCode::numeric_failure || e.exit == ExitCode::config_error) return e.exit;
    if (e.exit == ExitCode::acceptance_failure) worst = ExitCode::acceptance_failure;
  }
  return worst;
}

}  // namespace nlscm
