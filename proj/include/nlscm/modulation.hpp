#pragma once

// Splitting u(t) = psi_E(a(t)) + r(t) with a(t) = <psi0, u(t)>, and the
// diagnostics built on it: the amplitude ODE, the radiation equation
// residual, the gauge-removed amplitude and its limit.

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlscm/decay_fit.hpp"
#include "nlscm/error.hpp"
#include "nlscm/evolution.hpp"
#include "nlscm/ground_state_manifold.hpp"

namespace nlscm {

struct Decomposition {
  cplx a;
  double E = 0;
  RadialField psiE;
  RadialField r;
};

inline Decomposition decompose(const RadialField& u, const BoundStateBranch& branch) {
  const SpectralData& sd = branch.spectrum();
  require_same_grid(sd.grid(), u.grid());
  Decomposition d;
  d.a = inner_product(sd.psi0, u);
  ManifoldPoint mp = eval_manifold(branch, d.a);
  d.E = mp.E;
  d.psiE = std::move(mp.psi);
  d.r = u - d.psiE;
  return d;
}

inline Decomposition decompose(const TrajectoryFrame& frame, const BoundStateBranch& branch) {
  return decompose(frame.u, branch);
}

namespace detail {
/// <psi0, g(psiE + r) - g(psiE)>
inline cplx coupling(const BoundStateBranch& branch, const RadialField& psiE, const RadialField& r) {
  const auto& g = branch.nonlinearity();
  RadialField diff(r.grid());
  for (std::size_t j = 0; j < r.size(); ++j) diff[j] = g.apply(psiE[j] + r[j]) - g.apply(psiE[j]);
  return inner_product(branch.spectrum().psi0, diff);
}
}  // namespace detail

/// da/dt = -i [E(|a|) a + <psi0, g(psi_E + r) - g(psi_E)>].
inline cplx modulation_rhs(cplx a, const RadialField& r, const BoundStateBranch& branch) {
  const ManifoldPoint mp = eval_manifold(branch, a);
  return cplx(0.0, -1.0) * (mp.E * a + detail::coupling(branch, mp.psi, r));
}

/// Residual of i r' = H r + P_c[g(psi_E + r) - g(psi_E)] + i Dh|_a[i <psi0, g(psi_E + r) - g(psi_E)>]
/// at the middle of three equally spaced frames, in the L^2_{-sigma} norm.
/// `with_dh = false` drops the last term (ablation).
inline double radiation_residual(const TrajectoryFrame& prev, const TrajectoryFrame& mid, const TrajectoryFrame& next,
                                 const BoundStateBranch& branch, double sigma, bool with_dh = true) {
  const double h1 = mid.t - prev.t, h2 = next.t - mid.t;
  if (!(h1 > 0) || std::abs(h1 - h2) > 1e-9 * h1)
    throw InvalidArgument("non-uniform-frames", "radiation residual needs equally spaced frames");
  const SpectralData& sd = branch.spectrum();
  const auto& g = branch.nonlinearity();
  const Decomposition dp = decompose(prev, branch), dm = decompose(mid, branch), dn = decompose(next, branch);
  RadialField lhs = (cplx(0.0, 1.0) / (2.0 * h1)) * (dn.r - dp.r);
  RadialField diff(dm.r.grid());
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = g.apply(dm.psiE[j] + dm.r[j]) - g.apply(dm.psiE[j]);
  RadialField rhs = sd.hamiltonian.apply(dm.r) + project_continuous(sd, diff);
  if (with_dh) {
    const cplx c = inner_product(sd.psi0, diff);
    rhs.axpy(cplx(0.0, 1.0), dh_apply(branch, dm.a, cplx(0.0, 1.0) * c).value);
  }
  return weighted_l2_norm(lhs - rhs, -sigma);
}

struct ModulationTrace {
  std::vector<double> times;
  std::vector<cplx> a;
  std::vector<double> E;
  std::map<double, std::vector<double>> r_norms;  ///< p -> ||r(t)||_p over the reliable window (p = 2 always present)
  std::vector<double> orth_residual;              ///< |<psi0, r(t)>|
  std::vector<double> ode_residual;               ///< |centered da/dt - modulation_rhs|; NaN at the two ends
  std::vector<double> rhs_modulus;                ///< |modulation_rhs|
  double u0_norm = 0;

  std::size_t size() const noexcept { return times.size(); }

  DecayTrace norm_trace(double p, std::pair<double, double> window) const {
    const auto it = r_norms.find(p);
    if (it == r_norms.end()) throw InvalidArgument("missing-norm", "trace has no ||r||_p for p = " + std::to_string(p));
    DecayTrace tr;
    tr.label = "r_L" + std::to_string(p);
    tr.times = times;
    tr.values = it->second;
    tr.fit_window = window;
    return tr;
  }
};

/// Streaming decomposition of frames in time order.
class ModulationAnalyzer {
 public:
  ModulationAnalyzer(const BoundStateBranch& branch, std::vector<double> exponents, double r_window)
      : branch_(branch), r_window_(r_window) {
    exponents.push_back(2.0);
    for (double p : exponents) trace_.r_norms[p];
  }

  void consume(const TrajectoryFrame& f) {
    const Decomposition d = decompose(f, branch_);
    if (trace_.times.empty()) trace_.u0_norm = lp_norm(f.u, 2.0);
    trace_.times.push_back(f.t);
    trace_.a.push_back(d.a);
    trace_.E.push_back(d.E);
    const RadialField w = window(d.r, r_window_);
    for (auto& [p, series] : trace_.r_norms) series.push_back(lp_norm(w, p));
    trace_.orth_residual.push_back(std::abs(inner_product(branch_.spectrum().psi0, d.r)));
    const cplx rhs = cplx(0.0, -1.0) * (d.E * d.a + detail::coupling(branch_, d.psiE, d.r));
    rhs_.push_back(rhs);
    trace_.rhs_modulus.push_back(std::abs(rhs));
    trace_.ode_residual.push_back(std::nan(""));
    const std::size_t n = trace_.times.size();
    if (n >= 3) {
      const double h1 = trace_.times[n - 2] - trace_.times[n - 3];
      const double h2 = trace_.times[n - 1] - trace_.times[n - 2];
      if (std::abs(h1 - h2) <= 1e-9 * h1) {
        const cplx fd = (trace_.a[n - 1] - trace_.a[n - 3]) / (h1 + h2);
        trace_.ode_residual[n - 2] = std::abs(fd - rhs_[n - 2]);
      }
    }
  }

  const ModulationTrace& trace() const noexcept { return trace_; }
  ModulationTrace take() { return std::move(trace_); }

 private:
  const BoundStateBranch& branch_;
  double r_window_;
  ModulationTrace trace_;
  std::vector<cplx> rhs_;
};

/// Cumulative trapezoid integral of E(|a(s)|) over the trace.
inline std::vector<double> energy_phase(const ModulationTrace& tr) {
  std::vector<double> phi(tr.size(), 0.0);
  for (std::size_t k = 1; k < tr.size(); ++k) phi[k] = phi[k - 1] + 0.5 * (tr.E[k] + tr.E[k - 1]) * (tr.times[k] - tr.times[k - 1]);
  return phi;
}

/// a~(t) = exp(i int_0^t E(|a(s)|) ds) a(t).
inline std::vector<cplx> gauge_removed_a(const ModulationTrace& tr) {
  const auto phi = energy_phase(tr);
  std::vector<cplx> out(tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) out[k] = std::polar(1.0, phi[k]) * tr.a[k];
  return out;
}

struct AsymptoticReport {
  bool settled = false;  ///< |a~| oscillation over the last quarter below the band
  double tail_oscillation = 0;
  double a_inf = 0;
  double E_inf = 0;
  std::vector<double> theta_times;
  std::vector<double> theta;
  double convergence_exponent = std::nan("");
  std::pair<double, double> convergence_window{0, 0};
};

/// Limit amplitude, theta(t) = (1/t) int_0^t E(|a(s)|) - E(a_inf) ds for t >= 1,
/// and the slope of log|a~(t) - a~(T)| against log t on [T/8, T/2].
inline AsymptoticReport asymptotic_report(const ModulationTrace& tr, const BoundStateBranch& branch, double band = 1e-3) {
  if (tr.size() < 8) throw InsufficientData("modulation trace too short for an asymptotic report");
  AsymptoticReport rep;
  const auto at = gauge_removed_a(tr);
  const double T = tr.times.back();
  double lo = INFINITY, hi = 0, mean = 0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.times[k] < 0.75 * T) continue;
    const double m = std::abs(at[k]);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    mean += m;
    ++count;
  }
  mean /= static_cast<double>(count);
  rep.tail_oscillation = mean > 0 ? (hi - lo) / mean : 0.0;
  rep.settled = rep.tail_oscillation < band;
  rep.a_inf = std::abs(at.back());
  rep.E_inf = eval_manifold(branch, rep.a_inf).E;

  double integral = 0;
  for (std::size_t k = 1; k < tr.size(); ++k) {
    const double dt = tr.times[k] - tr.times[k - 1];
    integral += 0.5 * ((tr.E[k] - rep.E_inf) + (tr.E[k - 1] - rep.E_inf)) * dt;
    if (tr.times[k] >= 1.0) {
      rep.theta_times.push_back(tr.times[k]);
      rep.theta.push_back(integral / tr.times[k]);
    }
  }

  rep.convergence_window = {T / 8.0, T / 2.0};
  std::vector<double> x, y;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double t = tr.times[k];
    if (t < rep.convergence_window.first || t > rep.convergence_window.second) continue;
    const double d = std::abs(at[k] - at.back());
    if (!(d > 0)) continue;
    x.push_back(std::log(t));
    y.push_back(std::log(d));
  }
  if (x.size() >= 4) rep.convergence_exponent = -detail::least_squares_line(x, y).slope;
  return rep;
}

inline void write_trace_csv(const std::string& path, const ModulationTrace& tr, double p1, double p2) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os.precision(17);
  auto col = [&](double p) -> const std::vector<double>* {
    const auto it = tr.r_norms.find(p);
    return it == tr.r_norms.end() ? nullptr : &it->second;
  };
  const auto* n2 = col(2.0);
  const auto* np1 = col(p1);
  const auto* np2 = col(p2);
  os << "t,re_a,im_a,abs_a,E,orth_residual,r_L2,r_Lp1,r_Lp2,ode_residual\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << tr.times[k] << ',' << tr.a[k].real() << ',' << tr.a[k].imag() << ',' << std::abs(tr.a[k]) << ',' << tr.E[k]
       << ',' << tr.orth_residual[k] << ',' << (n2 ? (*n2)[k] : NAN) << ',' << (np1 ? (*np1)[k] : NAN) << ','
       << (np2 ? (*np2)[k] : NAN) << ',' << tr.ode_residual[k] << '\n';
  }
}

}  // namespace nlscm
