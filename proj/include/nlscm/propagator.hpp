#pragma once

// Linearized flow i z' = H z + B(t) z along a bound-state path, with
// B(t) z = P_c Dg|_{psi(t)}[z] + i Dh|_{a(t)}[i <psi0, Dg|_{psi(t)}[z]>],
// its nonlinear correction T(t,s) = Omega(t,s) - e^{-iH(t-s)} P_c, and
// the short-time piece T~(t,s).

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nlscm/dispersive_probe.hpp"
#include "nlscm/ground_state_manifold.hpp"
#include "nlscm/modulation.hpp"

namespace nlscm {

/// Phase-free coefficients of B at one time; psi(t) = phase(t) * profile, profile >= 0 real.
struct PathCoefficients {
  double amplitude = 0;        ///< |a(t)|
  std::vector<double> gp;      ///< g'(profile)
  std::vector<double> gr;      ///< g(profile)/profile
  std::vector<double> h;       ///< h(|a|) (real)
  std::vector<double> dh;      ///< radial derivative of h at |a|
  bool degenerate = false;     ///< |a| = 0
};

class LinearizationPath {
 public:
  enum class Mode { frozen, shadowing };

  /// Frozen path: the exact bound-state orbit a(t) = a0 e^{-i E(a0) t}.
  static LinearizationPath frozen(std::shared_ptr<const BoundStateBranch> branch, double a0) {
    if (!(a0 >= 0 && a0 <= branch->extent()))
      throw OutOfRange("frozen path amplitude " + std::to_string(a0) + " outside the branch");
    LinearizationPath p;
    p.mode_ = Mode::frozen;
    p.branch_ = std::move(branch);
    p.frozen_E_ = eval_manifold(*p.branch_, a0).E;
    p.cache_ = std::make_shared<const PathCoefficients>(p.coefficients_at_modulus(a0));
    return p;
  }

  /// Shadowing path: a(t) from a modulation trace, interpolated linearly in
  /// the gauge-removed amplitude and in the accumulated phase int E.
  static LinearizationPath shadowing(std::shared_ptr<const BoundStateBranch> branch, const ModulationTrace& trace) {
    if (trace.size() < 2) throw InsufficientData("shadowing path needs at least two trace samples");
    LinearizationPath p;
    p.mode_ = Mode::shadowing;
    p.branch_ = std::move(branch);
    p.times_ = trace.times;
    p.a_tilde_ = gauge_removed_a(trace);
    p.phase_ = energy_phase(trace);
    for (const cplx& a : trace.a)
      if (std::abs(a) > p.branch_->extent())
        throw OutOfRange("trace amplitude " + std::to_string(std::abs(a)) + " outside the branch");
    return p;
  }

  Mode mode() const noexcept { return mode_; }
  const BoundStateBranch& branch() const { return *branch_; }
  const SpectralData& spectrum() const { return branch_->spectrum(); }
  double start() const { return mode_ == Mode::frozen ? -kInf : times_.front(); }
  double end() const { return mode_ == Mode::frozen ? kInf : times_.back(); }

  cplx amplitude(double t) const {
    if (mode_ == Mode::frozen) return std::polar(cache_->amplitude, -frozen_E_ * t);
    require_window(t);
    std::size_t k = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
    k = std::clamp<std::size_t>(k, 1, times_.size() - 1);
    const double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
    const cplx at = (1 - w) * a_tilde_[k - 1] + w * a_tilde_[k];
    const double ph = (1 - w) * phase_[k - 1] + w * phase_[k];
    return std::polar(1.0, -ph) * at;
  }

  /// Coefficients at time t; `phase` receives a(t)/|a(t)|.
  std::shared_ptr<const PathCoefficients> coefficients(double t, cplx& phase) const {
    if (mode_ == Mode::frozen) {
      phase = std::polar(1.0, -frozen_E_ * t);
      return cache_;
    }
    const cplx a = amplitude(t);
    const double mod = std::abs(a);
    phase = mod > 0 ? a / mod : cplx(1.0);
    return std::make_shared<const PathCoefficients>(coefficients_at_modulus(mod));
  }

  void require_window(double t) const {
    if (t < start() - 1e-12 || t > end() + 1e-12)
      throw WindowViolation("time " + std::to_string(t) + " outside the linearization path window");
  }

 private:
  PathCoefficients coefficients_at_modulus(double mod) const {
    PathCoefficients c;
    c.amplitude = mod;
    const std::size_t m = branch_->grid().size();
    c.gp.assign(m, 0.0);
    c.gr.assign(m, 0.0);
    c.h.assign(m, 0.0);
    c.dh.assign(m, 0.0);
    if (mod == 0.0) {
      c.degenerate = true;
      return c;
    }
    const ManifoldPoint mp = eval_manifold(*branch_, mod);
    const auto& g = branch_->nonlinearity();
    for (std::size_t j = 0; j < m; ++j) {
      const double s = std::abs(mp.psi[j]);
      c.gp[j] = g.derivative(s);
      c.gr[j] = g.ratio(s);
      c.h[j] = mp.h[j].real();
    }
    const DhResult radial = dh_apply(*branch_, mod, 1.0);
    for (std::size_t j = 0; j < m; ++j) c.dh[j] = radial.value[j].real();
    return c;
  }

  Mode mode_ = Mode::frozen;
  std::shared_ptr<const BoundStateBranch> branch_;
  double frozen_E_ = 0;
  std::shared_ptr<const PathCoefficients> cache_;
  std::vector<double> times_;
  std::vector<cplx> a_tilde_;
  std::vector<double> phase_;
};

namespace detail {

/// Dg|_{psi}[z] with psi = phase * profile.
inline RadialField dg_on_path(const PathCoefficients& c, cplx phase, const RadialField& z) {
  RadialField out(z.grid());
  if (c.degenerate) return out;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const cplx w = std::conj(phase) * z[j];
    out[j] = phase * cplx(c.gp[j] * w.real(), c.gr[j] * w.imag());
  }
  return out;
}

/// Dh|_a[delta] from cached radial derivative and h(|a|).
inline void add_dh_on_path(const PathCoefficients& c, cplx phase, cplx coeff, cplx delta, RadialField& acc) {
  if (c.degenerate) return;
  const cplx d = std::conj(phase) * delta;
  const cplx f = coeff * phase;
  for (std::size_t j = 0; j < acc.size(); ++j)
    acc[j] += f * (d.real() * c.dh[j] + cplx(0.0, d.imag()) * c.h[j] / c.amplitude);
}

/// B(t) z.
inline RadialField apply_b(const SpectralData& sd, const PathCoefficients& c, cplx phase, const RadialField& z) {
  const RadialField dg = dg_on_path(c, phase, z);
  RadialField out = project_continuous(sd, dg);
  add_dh_on_path(c, phase, cplx(0.0, 1.0), cplx(0.0, 1.0) * inner_product(sd.psi0, dg), out);
  return out;
}

}  // namespace detail

/// Step-by-step integrator of the linearized flow.
class LinearizedFlow {
 public:
  LinearizedFlow(const LinearizationPath& path, double dt) : path_(path), dt_(dt), cn_(path.spectrum().hamiltonian, dt) {}

  double dt() const noexcept { return dt_; }

  /// z(t) -> z(t + dt): half B step, Crank-Nicolson, half B step; each B
  /// half step is an explicit midpoint rule with the time-dependent coefficient.
  void step(double t, RadialField& z) {
    half_b(t, z);
    cn_.step(z);
    half_b(t + 0.5 * dt_, z);
  }

 private:
  void half_b(double t0, RadialField& z) const {
    const SpectralData& sd = path_.spectrum();
    const double h = 0.5 * dt_;
    const cplx mi(0.0, -1.0);
    cplx phase;
    auto c = path_.coefficients(t0, phase);
    RadialField mid = z;
    mid.axpy(mi * (0.5 * h), detail::apply_b(sd, *c, phase, z));
    c = path_.coefficients(t0 + 0.5 * h, phase);
    z.axpy(mi * h, detail::apply_b(sd, *c, phase, mid));
  }

  const LinearizationPath& path_;
  double dt_;
  CrankNicolson cn_;
};

namespace detail {
inline long step_count(double s, double t, double dt) {
  if (!(dt > 0)) throw InvalidArgument("invalid-timestep", "propagator needs dt > 0");
  const long n = std::lround(std::abs(t - s) / dt);
  if (std::abs(n * dt - std::abs(t - s)) > 1e-9 * std::max(1.0, std::abs(t - s)))
    throw InvalidArgument("invalid-timestep", "t - s must be a multiple of dt");
  return n;
}

inline RadialField ensure_continuous(const SpectralData& sd, const RadialField& v) {
  const double overlap = std::abs(inner_product(sd.psi0, v));
  if (overlap > 1e-10 * std::max(1.0, lp_norm(v, 2.0))) return project_continuous(sd, v);
  return v;
}
}  // namespace detail

/// Omega(t,s) v; t < s integrates backward.
inline RadialField omega_apply(const LinearizationPath& path, double s, double t, const RadialField& v, double dt) {
  path.require_window(s);
  path.require_window(t);
  const long n = detail::step_count(s, t, dt);
  RadialField z = detail::ensure_continuous(path.spectrum(), v);
  if (n == 0) return z;
  const double h = t > s ? dt : -dt;
  LinearizedFlow flow(path, h);
  for (long k = 0; k < n; ++k) flow.step(s + k * h, z);
  return z;
}

/// T(t,s) v = Omega(t,s) v - e^{-iH(t-s)} P_c v, both with the same step.
inline RadialField t_operator_apply(const LinearizationPath& path, double s, double t, const RadialField& v, double dt) {
  const RadialField pv = project_continuous(path.spectrum(), v);
  RadialField out = omega_apply(path, s, t, pv, dt);
  const long n = detail::step_count(s, t, dt);
  if (n == 0) return out - pv;
  CrankNicolson cn(path.spectrum().hamiltonian, t > s ? dt : -dt);
  RadialField lin = pv;
  for (long k = 0; k < n; ++k) cn.step(lin);
  return out - lin;
}

/// T~(t,s) v = -i int_s^{min(t, s+1)} e^{-iH(t-tau)} P_c g_u(tau) e^{-iH(tau-s)} P_c v dtau
/// by the midpoint rule on the dt grid, for t >= s.
inline RadialField t_tilde_apply(const SpectralData& sd, const LinearizationPath& path, double s, double t,
                                 const RadialField& v, double dt) {
  if (t < s) throw InvalidArgument("invalid-interval", "T~(t,s) is defined here for t >= s");
  path.require_window(s);
  path.require_window(t);
  const long n = detail::step_count(s, t, dt);
  const long n_int = std::min(n, std::lround(1.0 / dt));
  RadialField w = project_continuous(sd, v);
  RadialField acc(v.grid());
  CrankNicolson full(sd.hamiltonian, dt), half(sd.hamiltonian, 0.5 * dt);
  for (long k = 0; k < n; ++k) {
    full.step(acc);
    if (k < n_int) {
      const double tau = s + (k + 0.5) * dt;
      RadialField wm = w;
      half.step(wm);
      cplx phase;
      const auto c = path.coefficients(tau, phase);
      RadialField y(v.grid());
      if (!c->degenerate)
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = 0.5 * (c->gp[j] + c->gr[j]) * wm[j];
      y = project_continuous(sd, y);
      half.step(y);
      acc.axpy(dt, y);
      full.step(w);
    }
  }
  acc *= cplx(0.0, -1.0);
  return acc;
}

/// One (operator, source, target) combination sampled by probe_decay.
struct ProbePair {
  enum class Operator { omega, t_operator };
  Operator op = Operator::omega;
  NormSpace source;
  NormSpace target;

  std::string label() const {
    return std::string(op == Operator::omega ? "Omega " : "T ") + source.label() + "->" + target.label();
  }
};

struct PropagatorProbeResult {
  std::vector<DecayTrace> traces;  ///< one per pair, sample-max ratio vs t - s
  double max_range_drift = 0;      ///< max |<psi0, Omega v>| / ||v||_2
};

/// Sampled norms of Omega(s + tau, s) v and T(s + tau, s) v for tau in
/// (0, T], with v random localized data in range P_c. Target norms are taken
/// over r <= r_start. `refinements` hill-climbing rounds perturb the
/// coefficients of the sample with the largest tail response.
inline PropagatorProbeResult probe_decay(const LinearizationPath& path, double s, const std::vector<ProbePair>& pairs,
                                         const ProbeSettings& settings, int refinements = 0) {
  const SpectralData& sd = path.spectrum();
  settings.validate(sd.grid());
  path.require_window(s);
  path.require_window(s + settings.T);
  for (const auto& pr : pairs)
    for (const NormSpace* sp : {&pr.source, &pr.target})
      if (sp->kind == NormSpace::Kind::lebesgue && !(sp->index >= 1))
        throw InvalidArgument("invalid-exponent", "probe exponents must be >= 1");

  const long steps = std::lround(settings.T / settings.dt);
  const std::vector<double> mask = settings.absorber.mask(sd.grid(), settings.dt);
  ProbeDataGenerator gen(settings.seed, settings.data_width, settings.data_support());

  PropagatorProbeResult out;
  out.traces.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.traces[i].label = pairs[i].label();
    out.traces[i].fit_window = settings.fit_window;
    for (long k = settings.frame_stride; k <= steps; k += settings.frame_stride) out.traces[i].push(k * settings.dt, 0.0);
  }

  // Runs one sample; returns per-pair ratio series.
  auto run = [&](const RadialField& v0) {
    const RadialField v = project_continuous(sd, v0);
    std::vector<double> src(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) src[i] = pairs[i].source.norm(v);
    std::vector<std::vector<double>> series(pairs.size());
    RadialField z = v, lin = v;
    LinearizedFlow flow(path, settings.dt);
    CrankNicolson cn(sd.hamiltonian, settings.dt);
    const double vn = lp_norm(v, 2.0);
    for (long k = 1; k <= steps; ++k) {
      flow.step(s + (k - 1) * settings.dt, z);
      cn.step(lin);
      if (settings.absorber.active())
        for (std::size_t j = 0; j < z.size(); ++j) {
          z[j] *= mask[j];
          lin[j] *= mask[j];
        }
      if (k % settings.frame_stride) continue;
      out.max_range_drift = std::max(out.max_range_drift, std::abs(inner_product(sd.psi0, z)) / vn);
      const RadialField zw = window(z, settings.absorber.r_start);
      const RadialField tw = window(z - lin, settings.absorber.r_start);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const RadialField& f = pairs[i].op == ProbePair::Operator::omega ? zw : tw;
        series[i].push_back(pairs[i].target.norm(f) / src[i]);
      }
    }
    return series;
  };
  auto absorb = [&](const std::vector<std::vector<double>>& series) {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      for (std::size_t k = 0; k < series[i].size(); ++k)
        out.traces[i].values[k] = std::max(out.traces[i].values[k], series[i][k]);
  };
  // Score of a sample: summed ratio over the second half of the window for the first pair.
  auto score = [&](const std::vector<std::vector<double>>& series) {
    double sc = 0;
    const auto& s0 = series.front();
    for (std::size_t k = s0.size() / 2; k < s0.size(); ++k) sc += s0[k];
    return sc;
  };

  std::vector<cplx> best_coeffs;
  double best_score = -1;
  for (int i = 0; i < settings.samples; ++i) {
    const auto c = gen.coefficients();
    const auto series = run(gen.field(sd.grid(), c));
    absorb(series);
    const double sc = score(series);
    if (sc > best_score) {
      best_score = sc;
      best_coeffs = c;
    }
  }
  for (int r = 0; r < refinements; ++r) {
    auto trial = best_coeffs;
    const auto kick = gen.coefficients();
    for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += 0.5 * kick[k];
    const auto series = run(gen.field(sd.grid(), trial));
    absorb(series);
    const double sc = score(series);
    if (sc > best_score) {
      best_score = sc;
      best_coeffs = trial;
    }
  }
  return out;
}

/// Short-time T probe: ||T(s + tau, s) v||_target / ||v||_source at the given tau values.
inline DecayTrace probe_short_time(const LinearizationPath& path, double s, const ProbePair& pair,
                                   const std::vector<double>& taus, const ProbeSettings& settings) {
  const SpectralData& sd = path.spectrum();
  ProbeDataGenerator gen(settings.seed, settings.data_width, settings.data_support());
  DecayTrace tr;
  tr.label = "short-time " + pair.label();
  tr.times = taus;
  tr.values.assign(taus.size(), 0.0);
  for (int i = 0; i < settings.samples; ++i) {
    const RadialField v = gen.next(sd);
    const double src = pair.source.norm(v);
    RadialField z = v, lin = v;
    LinearizedFlow flow(path, settings.dt);
    CrankNicolson cn(sd.hamiltonian, settings.dt);
    long done = 0;
    for (std::size_t q = 0; q < taus.size(); ++q) {
      const long target = detail::step_count(0.0, taus[q], settings.dt);
      for (; done < target; ++done) {
        flow.step(s + done * settings.dt, z);
        cn.step(lin);
      }
      const RadialField f = pair.op == ProbePair::Operator::omega ? z : z - lin;
      tr.values[q] = std::max(tr.values[q], pair.target.norm(f) / src);
    }
  }
  return tr;
}

/// Short-time T probe over concentrated data: sup over Gaussians e^{-(r/w)^2}
/// (projected onto P_c) of ||T(s + tau, s) v||_target / ||v||_source, for
/// each tau. Narrow widths approach the operator norm the smooth probe misses.
inline DecayTrace probe_short_time_scan(const LinearizationPath& path, double s, const ProbePair& pair,
                                        const std::vector<double>& taus, const std::vector<double>& widths, double dt) {
  const SpectralData& sd = path.spectrum();
  const double h = sd.grid().r_max() / static_cast<double>(sd.grid().size());
  DecayTrace tr;
  tr.label = "short-time scan " + pair.label();
  tr.times = taus;
  tr.values.assign(taus.size(), 0.0);
  for (double w : widths) {
    if (!(w >= 4 * h)) throw InvalidArgument("invalid-width", "probe width must span at least 4 grid cells");
    const RadialField v = project_continuous(
        sd, RadialField::from_function(sd.grid(), [w](double r) { return cplx(std::exp(-r * r / (w * w))); }));
    const double src = pair.source.norm(v);
    RadialField z = v, lin = v;
    LinearizedFlow flow(path, dt);
    CrankNicolson cn(sd.hamiltonian, dt);
    long done = 0;
    for (std::size_t q = 0; q < taus.size(); ++q) {
      const long target = detail::step_count(0.0, taus[q], dt);
      for (; done < target; ++done) {
        flow.step(s + done * dt, z);
        cn.step(lin);
      }
      const RadialField f = pair.op == ProbePair::Operator::omega ? z : z - lin;
      tr.values[q] = std::max(tr.values[q], pair.target.norm(f) / src);
    }
  }
  return tr;
}

}  // namespace nlscm
