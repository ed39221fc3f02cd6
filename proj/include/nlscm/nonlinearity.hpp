#pragma once

// Gauge-invariant power nonlinearities g(z) = sum_k lambda_k |z|^{alpha_k} z,
// their real linearization along bound states and the quadratic remainder.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlscm/error.hpp"
#include "nlscm/radial_grid.hpp"

namespace nlscm {

/// Admissible open interval (alpha_0(N), 4/(N-2)) for the power exponents.
inline std::pair<double, double> alpha_bounds(int dim) {
  if (dim != 4 && dim != 5) throw InvalidArgument("unsupported-dimension", "alpha bounds are defined for N = 4, 5");
  const double n = dim;
  const double lo = (2.0 - n + std::sqrt(n * n + 12.0 * n + 4.0)) / (2.0 * n);
  return {lo, 4.0 / (n - 2.0)};
}

struct PowerTerm {
  double lambda;
  double alpha;
};

class NonlinearitySpec {
 public:
  NonlinearitySpec() = default;

  /// Validated construction: every exponent must lie in the admissible interval.
  NonlinearitySpec(int dim, std::vector<PowerTerm> terms) : dim_(dim), terms_(std::move(terms)) {
    const auto [lo, hi] = alpha_bounds(dim);
    for (const auto& t : terms_) {
      if (!(t.alpha > lo && t.alpha < hi)) {
        std::ostringstream msg;
        msg << "exponent alpha = " << t.alpha << " outside the admissible interval (" << lo << ", " << hi
            << ") for N = " << dim;
        throw ConfigError(msg.str(), "nonlinearity.alpha");
      }
      if (!std::isfinite(t.lambda)) throw ConfigError("nonlinearity coefficient must be finite", "nonlinearity.lambda");
    }
  }

  /// Skips the exponent check. Only for test stubs such as the linear map g(s) = lambda s.
  static NonlinearitySpec unchecked(int dim, std::vector<PowerTerm> terms) {
    NonlinearitySpec s;
    s.dim_ = dim;
    s.terms_ = std::move(terms);
    return s;
  }

  static NonlinearitySpec zero(int dim) { return unchecked(dim, {}); }

  int dim() const noexcept { return dim_; }
  const std::vector<PowerTerm>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept {
    return std::all_of(terms_.begin(), terms_.end(), [](const PowerTerm& t) { return t.lambda == 0.0; });
  }
  double alpha1() const {
    if (terms_.empty()) throw InvalidArgument("empty-nonlinearity", "alpha_1 undefined for g = 0");
    double a = terms_.front().alpha;
    for (const auto& t : terms_) a = std::min(a, t.alpha);
    return a;
  }
  double alpha2() const {
    if (terms_.empty()) throw InvalidArgument("empty-nonlinearity", "alpha_2 undefined for g = 0");
    double a = terms_.front().alpha;
    for (const auto& t : terms_) a = std::max(a, t.alpha);
    return a;
  }

  /// g(s)/s = sum lambda |s|^alpha for s >= 0; the phase-rotation rate of the
  /// pointwise nonlinear flow.
  double ratio(double s) const noexcept {
    double v = 0;
    for (const auto& t : terms_) v += t.lambda * std::pow(s, t.alpha);
    return v;
  }
  /// g'(s) for s > 0.
  double derivative(double s) const noexcept {
    double v = 0;
    for (const auto& t : terms_) v += t.lambda * (t.alpha + 1.0) * std::pow(s, t.alpha);
    return v;
  }
  /// Antiderivative G(s) = sum lambda s^{alpha+2}/(alpha+2), G' = g on s >= 0.
  double potential(double s) const noexcept {
    double v = 0;
    for (const auto& t : terms_) v += t.lambda * std::pow(s, t.alpha + 2.0) / (t.alpha + 2.0);
    return v;
  }

  cplx apply(cplx z) const noexcept { return ratio(std::abs(z)) * z; }

 private:
  int dim_ = 4;
  std::vector<PowerTerm> terms_;
};

inline cplx g_apply(const NonlinearitySpec& spec, cplx z) { return spec.apply(z); }

inline RadialField g_apply(const NonlinearitySpec& spec, const RadialField& f) {
  RadialField out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = spec.apply(f[j]);
  return out;
}

namespace detail {
inline void require_positive_real(const RadialField& psi) {
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const cplx z = psi[j];
    if (!(z.real() > 0.0) || std::abs(z.imag()) > 1e-14 * z.real())
      throw InvalidArgument("invalid-bound-state",
                            "bound state must be strictly positive and real; fails at node " + std::to_string(j));
  }
}

/// Dg at a positive real s applied to beta.
inline cplx dg_point(const NonlinearitySpec& spec, double s, cplx beta) {
  return {spec.derivative(s) * beta.real(), spec.ratio(s) * beta.imag()};
}
}  // namespace detail

/// Dg|_psi[beta] = g'(psi) Re beta + i (g(psi)/psi) Im beta for a positive real profile psi.
inline RadialField dg_apply(const NonlinearitySpec& spec, const RadialField& psi, const RadialField& beta) {
  require_same_grid(psi.grid(), beta.grid());
  detail::require_positive_real(psi);
  RadialField out(psi.grid());
  for (std::size_t j = 0; j < psi.size(); ++j) out[j] = detail::dg_point(spec, psi[j].real(), beta[j]);
  return out;
}

/// Dg at an arbitrary complex profile, pointwise via the rotation identity
/// Dg|_{e^{i theta} s}[beta] = e^{i theta} Dg|_s[e^{-i theta} beta]. Vanishes where psi = 0.
inline RadialField dg_apply_rotated(const NonlinearitySpec& spec, const RadialField& psi, const RadialField& beta) {
  require_same_grid(psi.grid(), beta.grid());
  RadialField out(psi.grid());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const double s = std::abs(psi[j]);
    if (s == 0.0) continue;
    const cplx phase = psi[j] / s;
    out[j] = phase * detail::dg_point(spec, s, std::conj(phase) * beta[j]);
  }
  return out;
}

/// Complex-linear part g_u = dg/du at a profile: (g'(|psi|) + g(|psi|)/|psi|)/2.
inline std::vector<double> g_u_coefficient(const NonlinearitySpec& spec, const RadialField& psi) {
  std::vector<double> out(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const double s = std::abs(psi[j]);
    out[j] = s == 0.0 ? 0.0 : 0.5 * (spec.derivative(s) + spec.ratio(s));
  }
  return out;
}

/// F_2(psi, r) = g(psi + r) - g(psi) - Dg|_psi[r].
inline RadialField f2_apply(const NonlinearitySpec& spec, const RadialField& psi, const RadialField& r) {
  require_same_grid(psi.grid(), r.grid());
  RadialField out = dg_apply_rotated(spec, psi, r);
  for (std::size_t j = 0; j < psi.size(); ++j) out[j] = spec.apply(psi[j] + r[j]) - spec.apply(psi[j]) - out[j];
  return out;
}

/// Sobolev surrogates of the effective potentials g'(psi) and g(psi)/psi.
struct PotentialSmoothnessReport {
  // index 0..3: L^2 norms of q, dq/dr, Delta q, d^3q/dr^3 over r <= R_max/2
  double g_prime[4] = {0, 0, 0, 0};
  double g_ratio[4] = {0, 0, 0, 0};
  bool all_finite = false;
};

namespace detail {
inline void sobolev_surrogates(const RadialField& q, double (&out)[4]) {
  const double cut = 0.5 * q.grid().r_max();
  const RadialField d1 = radial_derivative(q);
  const RadialField lap = apply_laplacian(q);
  const RadialField d3 = radial_derivative(radial_derivative(d1));
  out[0] = lp_norm(window(q, cut), 2.0);
  out[1] = lp_norm(window(d1, cut), 2.0);
  out[2] = lp_norm(window(lap, cut), 2.0);
  out[3] = lp_norm(window(d3, cut), 2.0);
}
}  // namespace detail

/// Discrete H^3 check of g'(psi_E) and g(psi_E)/psi_E. Derivative norms are
/// taken over r <= R_max/2 so the outer Dirichlet face does not contribute.
inline PotentialSmoothnessReport check_potential_smoothness(const NonlinearitySpec& spec, const RadialField& psi) {
  detail::require_positive_real(psi);
  RadialField gp(psi.grid()), gr(psi.grid());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    gp[j] = spec.derivative(psi[j].real());
    gr[j] = spec.ratio(psi[j].real());
  }
  PotentialSmoothnessReport rep;
  detail::sobolev_surrogates(gp, rep.g_prime);
  detail::sobolev_surrogates(gr, rep.g_ratio);
  rep.all_finite = true;
  for (int k = 0; k < 4; ++k)
    rep.all_finite = rep.all_finite && std::isfinite(rep.g_prime[k]) && std::isfinite(rep.g_ratio[k]);
  return rep;
}

}  // namespace nlscm
