#pragma once

// Center manifold of nonlinear bound states psi_E = a psi0 + h(a), E = E(|a|),
// continued in the real amplitude a >= 0 and extended to complex a by the
// gauge action h(e^{i theta} a) = e^{i theta} h(a).

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "nlscm/error.hpp"
#include "nlscm/linear_hamiltonian.hpp"
#include "nlscm/nonlinearity.hpp"
#include "nlscm/radial_grid.hpp"

namespace nlscm {

struct BranchPoint {
  double a = 0;
  double E = 0;
  RadialField psi;  ///< real, positive for a > 0
  RadialField h;    ///< psi - a psi0
  double newton_residual = 0;
};

struct ContinuationOptions {
  double residual_tolerance = 1e-10;  ///< accepted PDE residual ||(H - E) psi + g(psi)||_2
  int max_newton_iterations = 40;
  int polish_passes = 2;
};

class BoundStateBranch {
 public:
  BoundStateBranch() = default;
  BoundStateBranch(std::shared_ptr<const SpectralData> spectrum, NonlinearitySpec g, std::vector<BranchPoint> nodes,
                   ContinuationOptions options = {})
      : spectrum_(std::move(spectrum)), g_(std::move(g)), nodes_(std::move(nodes)), options_(options) {
    if (nodes_.size() < 2) throw InvalidArgument("branch-too-short", "a branch needs at least two nodes");
    spacing_ = nodes_[1].a - nodes_[0].a;
  }

  const SpectralData& spectrum() const { return *spectrum_; }
  std::shared_ptr<const SpectralData> spectrum_ptr() const { return spectrum_; }
  const NonlinearitySpec& nonlinearity() const noexcept { return g_; }
  const std::vector<BranchPoint>& nodes() const noexcept { return nodes_; }
  const ContinuationOptions& options() const noexcept { return options_; }
  double spacing() const noexcept { return spacing_; }
  double extent() const noexcept { return nodes_.back().a; }
  const GridSpec& grid() const { return spectrum_->grid(); }

 private:
  std::shared_ptr<const SpectralData> spectrum_;
  NonlinearitySpec g_;
  std::vector<BranchPoint> nodes_;
  ContinuationOptions options_;
  double spacing_ = 0;
};

/// ||H psi + g(psi) - E psi||_2 for a real profile.
inline double bound_state_residual(const SpectralData& sd, const NonlinearitySpec& g, const RadialField& psi, double E) {
  RadialField res = sd.hamiltonian.apply(psi);
  for (std::size_t j = 0; j < psi.size(); ++j) res[j] += g.apply(psi[j]) - E * psi[j];
  return lp_norm(res, 2.0);
}

namespace detail {

/// Newton's method on F(psi, E) = ((H - E) psi + g(psi), <psi0, psi> - a).
/// The bordered Jacobian is eliminated with two tridiagonal solves.
inline bool newton_bound_state(const SpectralData& sd, const NonlinearitySpec& g, double a, std::vector<double>& psi,
                               double& E, const ContinuationOptions& opt) {
  const std::size_t m = psi.size();
  const auto& hm = sd.hamiltonian.matrix();
  const auto w = sd.grid().weights();
  std::vector<double> f1(m), x1(m), x2(m);
  auto proj = [&](const std::vector<double>& v) {
    double s = 0;
    for (std::size_t j = 0; j < m; ++j) s += w[j] * sd.psi0[j].real() * v[j];
    return s;
  };
  double prev_res = INFINITY;
  for (int it = 0; it < opt.max_newton_iterations; ++it) {
    hm.multiply<double>(std::span<const double>(psi), std::span<double>(f1));
    Tridiagonal<double> jac = hm;
    double res2 = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double s = std::abs(psi[j]);
      f1[j] += g.ratio(s) * psi[j] - E * psi[j];
      res2 += w[j] * f1[j] * f1[j];
      jac.diag[j] += g.derivative(s) - E;
    }
    const double f2 = proj(psi) - a;
    const double res = std::sqrt(res2);
    const bool on_constraint = std::abs(f2) < 1e-13 * std::max(1.0, a);
    if (res < 0.01 * opt.residual_tolerance && on_constraint) return true;
    // On fine grids rounding in H psi puts a floor under the residual; stop
    // once it is below tolerance and no longer dropping.
    if (res < opt.residual_tolerance && res > 0.5 * prev_res && on_constraint) return true;
    prev_res = res;
    const TridiagonalSolver<double> solver(jac);
    for (std::size_t j = 0; j < m; ++j) {
      x1[j] = -f1[j];
      x2[j] = psi[j];
    }
    solver.solve_in_place<double>(x1);
    solver.solve_in_place<double>(x2);
    const double denom = proj(x2);
    if (denom == 0 || !std::isfinite(denom)) return false;
    const double dE = (-f2 - proj(x1)) / denom;
    double step = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = x1[j] + dE * x2[j];
      psi[j] += d;
      step = std::max(step, std::abs(d));
    }
    E += dE;
    if (!std::isfinite(E) || !std::isfinite(step)) return false;
    if (step < 1e-15 * std::max(1.0, a) && std::abs(dE) < 1e-15) return true;
  }
  return false;
}

/// Self-consistent refinement: psi is the positive ground state of
/// H + g(psi)/psi with eigenvalue E, rescaled so <psi0, psi> = a. Removes
/// sign noise in the exponentially small tail left by the Newton solves.
inline void polish_bound_state(const SpectralData& sd, const NonlinearitySpec& g, double a, RadialField& psi, double& E) {
  const std::size_t m = psi.size();
  std::vector<double> q(m);
  for (std::size_t j = 0; j < m; ++j) q[j] = g.ratio(std::abs(psi[j].real()));
  RadialField phi;
  ground_state_of(sd.hamiltonian, q, phi);
  const double c = inner_product(sd.psi0, phi).real();
  psi = (a / c) * phi;
  RadialField hpsi = sd.hamiltonian.apply(psi);
  double num = 0, den = 0;
  const auto w = sd.grid().weights();
  for (std::size_t j = 0; j < m; ++j) {
    const double p = psi[j].real();
    num += w[j] * p * (hpsi[j].real() + q[j] * p);
    den += w[j] * p * p;
  }
  E = num / den;
}

}  // namespace detail

/// Continues the bound-state branch over `steps` uniform intervals of [0, a_max].
inline BoundStateBranch continue_branch(std::shared_ptr<const SpectralData> sd, const NonlinearitySpec& g, double a_max,
                                        int steps, ContinuationOptions opt = {}) {
  if (steps < 2) throw InvalidArgument("invalid-steps", "continuation needs at least 2 steps");
  if (!(a_max > 0)) throw InvalidArgument("invalid-extent", "continuation needs a_max > 0");
  const GridSpec& grid = sd->grid();
  const std::size_t m = grid.size();
  std::vector<BranchPoint> nodes;
  nodes.reserve(steps + 1);
  BranchPoint origin;
  origin.a = 0;
  origin.E = sd->E0;
  origin.psi = RadialField(grid);
  origin.h = RadialField(grid);
  nodes.push_back(origin);

  const double da = a_max / steps;
  for (int k = 1; k <= steps; ++k) {
    const double a = k == steps ? a_max : k * da;
    std::vector<double> psi(m);
    double E;
    if (k == 1) {
      for (std::size_t j = 0; j < m; ++j) psi[j] = a * sd->psi0[j].real();
      E = sd->E0;
    } else {
      const auto& p1 = nodes[k - 1];
      const auto& p2 = nodes[k - 2];
      const double s = (a - p1.a) / (p1.a - p2.a);
      for (std::size_t j = 0; j < m; ++j) psi[j] = p1.psi[j].real() + s * (p1.psi[j].real() - p2.psi[j].real());
      E = p1.E + s * (p1.E - p2.E);
    }
    const double last_good = nodes.back().a;
    if (!detail::newton_bound_state(*sd, g, a, psi, E, opt))
      throw BranchTermination(last_good, "Newton failed to converge at a = " + std::to_string(a));

    BranchPoint pt;
    pt.a = a;
    pt.psi = RadialField(grid);
    for (std::size_t j = 0; j < m; ++j) pt.psi[j] = psi[j];
    // The exact positive solution has no sign change; a large negative lobe
    // means Newton left the ground-state branch.
    double neg = 0, pos = 0;
    for (std::size_t j = 0; j < m; ++j) {
      neg = std::min(neg, psi[j]);
      pos = std::max(pos, psi[j]);
    }
    if (neg < -1e-8 * pos)
      throw BranchTermination(last_good, "bound state changed sign at a = " + std::to_string(a) + " (positivity violation)");
    pt.E = E;
    for (int pass = 0; pass < opt.polish_passes; ++pass) detail::polish_bound_state(*sd, g, a, pt.psi, pt.E);
    for (std::size_t j = 0; j < m; ++j)
      if (!(pt.psi[j].real() > 0))
        throw BranchTermination(last_good, "bound state not strictly positive at a = " + std::to_string(a));
    pt.newton_residual = bound_state_residual(*sd, g, pt.psi, pt.E);
    if (!(pt.newton_residual < opt.residual_tolerance))
      throw BranchTermination(last_good, "residual " + std::to_string(pt.newton_residual) + " above tolerance at a = " +
                                             std::to_string(a));
    pt.h = pt.psi;
    pt.h.axpy(-a, sd->psi0);
    nodes.push_back(std::move(pt));
  }
  return BoundStateBranch(std::move(sd), g, std::move(nodes), opt);
}

/// Point on the manifold: psi_E(a) (complex) and E(|a|).
struct ManifoldPoint {
  RadialField psi;
  RadialField h;
  double E = 0;
};

namespace detail {
struct Stencil {
  std::array<std::size_t, 4> node{};
  std::array<double, 4> weight{};
  std::array<double, 4> h_sign{1, 1, 1, 1};  ///< -1 for the mirrored node h(-a) = -h(a)
  std::size_t count = 0;
};

/// Four-point Lagrange weights on the nodes surrounding `x`. On the first
/// interval the stencil reaches across a = 0 through the mirror image of
/// node 1 (E even, h odd in a).
inline Stencil cubic_stencil(const BoundStateBranch& b, double x) {
  const auto& nodes = b.nodes();
  const std::size_t n = nodes.size();
  std::size_t k = static_cast<std::size_t>(std::floor(x / b.spacing()));
  if (k >= n - 1) k = n - 2;
  Stencil st;
  std::array<double, 4> at{};
  if (k == 0 && n >= 3) {
    st.count = 4;
    st.node = {1, 0, 1, 2};
    st.h_sign = {-1, 1, 1, 1};
    at = {-nodes[1].a, nodes[0].a, nodes[1].a, nodes[2].a};
  } else {
    st.count = std::min<std::size_t>(4, n);
    std::size_t first = k - 1;
    if (first + st.count > n) first = n - st.count;
    for (std::size_t i = 0; i < st.count; ++i) {
      st.node[i] = first + i;
      at[i] = nodes[first + i].a;
    }
  }
  for (std::size_t i = 0; i < st.count; ++i) {
    double l = 1.0;
    for (std::size_t j = 0; j < st.count; ++j)
      if (j != i) l *= (x - at[j]) / (at[i] - at[j]);
    st.weight[i] = l;
  }
  return st;
}
}  // namespace detail

/// Interpolated bound state at complex amplitude a; gauge-equivariant by construction.
inline ManifoldPoint eval_manifold(const BoundStateBranch& b, cplx a) {
  const double mod = std::abs(a);
  if (!(mod <= b.extent() * (1 + 1e-12)))
    throw OutOfRange("|a| = " + std::to_string(mod) + " beyond branch extent " + std::to_string(b.extent()));
  const auto st = detail::cubic_stencil(b, mod);
  const auto& nodes = b.nodes();
  const std::size_t m = b.grid().size();
  ManifoldPoint out;
  out.h = RadialField(b.grid());
  for (std::size_t i = 0; i < st.count; ++i) {
    if (st.weight[i] == 0.0) continue;
    const auto& node = nodes[st.node[i]];
    out.E += st.weight[i] * node.E;
    const double w = st.weight[i] * st.h_sign[i];
    for (std::size_t j = 0; j < m; ++j) out.h[j] += w * node.h[j].real();
  }
  const cplx phase = mod > 0 ? a / mod : cplx(1.0);
  out.h *= phase;
  out.psi = out.h;
  out.psi.axpy(a, b.spectrum().psi0);
  return out;
}

struct DhResult {
  RadialField value;
  bool one_sided = false;   ///< top endpoint: backward difference used
  bool degenerate = false;  ///< a = 0: zero map returned
};

/// Real-linear derivative Dh|_a[delta]. The radial direction uses centered
/// branch differences at the node spacing (h(-x) = -h(x) covers a near 0);
/// the rotational direction is exact: Dh|_a[i a] = i h(a).
inline DhResult dh_apply(const BoundStateBranch& b, cplx a, cplx delta) {
  DhResult out;
  const double mod = std::abs(a);
  if (mod == 0.0) {
    out.value = RadialField(b.grid());
    out.degenerate = true;
    return out;
  }
  const cplx phase = a / mod;
  const cplx d = std::conj(phase) * delta;  // direction in the real-a frame
  const double step = b.spacing();
  const RadialField h0 = eval_manifold(b, mod).h;
  RadialField radial;
  if (mod + step <= b.extent() * (1 + 1e-12)) {
    const RadialField hp = eval_manifold(b, mod + step).h;
    const double lo = mod - step;
    const RadialField hm = lo >= 0 ? eval_manifold(b, lo).h : -1.0 * eval_manifold(b, -lo).h;
    radial = (1.0 / (2.0 * step)) * (hp - hm);
  } else {
    const RadialField hm = eval_manifold(b, mod - step).h;
    radial = (1.0 / step) * (h0 - hm);
    out.one_sided = true;
  }
  // Dh|_{mod}[x + i y] = x radial + i y h(mod)/mod, then rotate back.
  out.value = RadialField(b.grid());
  for (std::size_t j = 0; j < out.value.size(); ++j)
    out.value[j] = phase * (d.real() * radial[j] + cplx(0.0, d.imag()) * h0[j] / mod);
  return out;
}

struct ExponentialDecayReport {
  double C_A = 0;         ///< max e^{sqrt(A) r}|psi| / max|psi|
  double C_A_grad = 0;    ///< same for the radial gradient
  double C_lower = 0;     ///< min e^{sqrt(A2) r} psi with A2 = -2E
  bool ok = false;
};

/// Exponential decay constants of a branch point, over r <= R_max/2.
inline ExponentialDecayReport check_exponential_decay(const BranchPoint& pt, double A) {
  if (!(A > 0 && A < -pt.E))
    throw InvalidArgument("invalid-rate", "decay rate A must satisfy 0 < A < -E");
  const GridSpec& grid = pt.psi.grid();
  const double cut = 0.5 * grid.r_max();
  const RadialField grad = radial_derivative(pt.psi);
  const double sa = std::sqrt(A), sa2 = std::sqrt(-2.0 * pt.E);
  double max_psi = 0, max_grad = 0, w_psi = 0, w_grad = 0, lower = INFINITY;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double r = grid.node(j);
    if (r > cut) break;
    const double p = std::abs(pt.psi[j]), g = std::abs(grad[j]);
    max_psi = std::max(max_psi, p);
    max_grad = std::max(max_grad, g);
    w_psi = std::max(w_psi, std::exp(sa * r) * p);
    w_grad = std::max(w_grad, std::exp(sa * r) * g);
    lower = std::min(lower, std::exp(sa2 * r) * pt.psi[j].real());
  }
  ExponentialDecayReport rep;
  if (max_psi == 0) {
    rep.C_A = rep.C_A_grad = 1.0;
    rep.C_lower = 0;
    rep.ok = true;
    return rep;
  }
  rep.C_A = w_psi / max_psi;
  rep.C_A_grad = max_grad > 0 ? w_grad / max_grad : 1.0;
  rep.C_lower = lower;
  rep.ok = std::isfinite(rep.C_A) && std::isfinite(rep.C_A_grad) && rep.C_lower > 0 && std::isfinite(rep.C_lower);
  return rep;
}

/// sup_r <r>^{4 sigma} |psi(r)|.
inline double check_smallness(const BranchPoint& pt, double sigma) {
  double s = 0;
  for (std::size_t j = 0; j < pt.psi.size(); ++j) {
    const double r = pt.psi.grid().node(j);
    s = std::max(s, std::pow(1.0 + r * r, 2.0 * sigma) * std::abs(pt.psi[j]));
  }
  return s;
}

}  // namespace nlscm
