#pragma once

// H = -Delta + V on the radial grid: ground eigenpair, the continuous
// spectral projection P_c = I - psi0 <psi0, .>, and Crank-Nicolson e^{-iHt}.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "nlscm/error.hpp"
#include "nlscm/radial_grid.hpp"
#include "nlscm/tridiagonal.hpp"

namespace nlscm {

enum class PotentialForm { gaussian_well, exponential_well };

inline std::string to_string(PotentialForm f) {
  return f == PotentialForm::gaussian_well ? "gaussian_well" : "exponential_well";
}

inline PotentialForm potential_form_from_string(const std::string& s) {
  if (s == "gaussian_well") return PotentialForm::gaussian_well;
  if (s == "exponential_well") return PotentialForm::exponential_well;
  throw ConfigError("unknown potential form '" + s + "'", "potential.form");
}

/// Attractive radial well. gaussian_well: -V0 exp(-(r/w)^2).
/// exponential_well: -V0 exp(1 - sqrt(1 + (r/w)^2)), smooth at the origin.
struct PotentialSpec {
  PotentialForm form = PotentialForm::gaussian_well;
  double depth = 0;  ///< V0 > 0
  double width = 1;  ///< w > 0

  void validate() const {
    if (!(depth > 0)) throw ConfigError("potential depth must be positive (attractive well)", "potential.depth");
    if (!(width > 0)) throw ConfigError("potential width must be positive", "potential.width");
  }

  double operator()(double r) const {
    const double x = r / width;
    if (form == PotentialForm::gaussian_well) return -depth * std::exp(-x * x);
    return -depth * std::exp(1.0 - std::sqrt(1.0 + x * x));
  }

  std::vector<double> sample(const GridSpec& grid) const {
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) v[j] = (*this)(grid.node(j));
    return v;
  }
};

/// H = -Delta + diag(V) as a (weight-symmetric) real tridiagonal matrix.
class Hamiltonian {
 public:
  Hamiltonian() = default;
  Hamiltonian(GridSpec grid, std::vector<double> potential) : grid_(std::move(grid)), potential_(std::move(potential)) {
    const LaplacianStencil st(grid_);
    const std::size_t m = grid_.size();
    matrix_ = Tridiagonal<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
      matrix_.lower[j] = -st.lower[j];
      matrix_.upper[j] = -st.upper[j];
      matrix_.diag[j] = -st.diag[j] + potential_[j];
    }
  }
  Hamiltonian(const GridSpec& grid, const PotentialSpec& v) : Hamiltonian(grid, v.sample(grid)) {}

  const GridSpec& grid() const noexcept { return grid_; }
  const Tridiagonal<double>& matrix() const noexcept { return matrix_; }
  std::span<const double> potential() const noexcept { return potential_; }

  RadialField apply(const RadialField& f) const {
    RadialField out(f.grid());
    matrix_.multiply<cplx>(f.values(), out.values());
    return out;
  }

  /// Similarity transform sqrt(W) H sqrt(W)^{-1}, which is symmetric.
  SymTridiagonal symmetrized(std::span<const double> extra_diagonal = {}) const {
    const std::size_t m = grid_.size();
    SymTridiagonal s;
    s.diag = matrix_.diag;
    if (!extra_diagonal.empty())
      for (std::size_t j = 0; j < m; ++j) s.diag[j] += extra_diagonal[j];
    s.off.resize(m - 1);
    for (std::size_t j = 0; j + 1 < m; ++j) s.off[j] = -std::sqrt(matrix_.upper[j] * matrix_.lower[j + 1]);
    return s;
  }

 private:
  GridSpec grid_;
  std::vector<double> potential_;
  Tridiagonal<double> matrix_;
};

namespace detail {
/// Lowest eigenvector of a symmetric tridiagonal matrix by shifted inverse
/// iteration just below `lambda0`. The shifted matrix is an M-matrix, so the
/// Thomas sweeps keep every entry positive, including exponentially small tails.
inline std::vector<double> lowest_eigenvector(const SymTridiagonal& s, double lambda0, double gap) {
  const std::size_t m = s.size();
  const double shift = lambda0 - 1e-9 * std::max({1.0, std::abs(lambda0), gap});
  Tridiagonal<double> a(m);
  for (std::size_t j = 0; j < m; ++j) {
    a.diag[j] = s.diag[j] - shift;
    if (j > 0) a.lower[j] = s.off[j - 1];
    if (j + 1 < m) a.upper[j] = s.off[j];
  }
  const TridiagonalSolver<double> solver(a);
  std::vector<double> y(m, 1.0);
  for (int it = 0; it < 24; ++it) {
    solver.solve_in_place<double>(y);
    double nrm = 0;
    for (double v : y) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (double& v : y) v /= nrm;
  }
  return y;
}
}  // namespace detail

/// Ground state of H: the unique negative eigenvalue and its positive,
/// L^2-normalized eigenvector.
struct SpectralData {
  PotentialSpec potential;
  Hamiltonian hamiltonian;
  double E0 = 0;
  double second_eigenvalue = 0;
  RadialField psi0;
  double residual = 0;  ///< ||H psi0 - E0 psi0||_2

  const GridSpec& grid() const noexcept { return psi0.grid(); }
};

/// Positive eigenvector of the symmetric form with extra diagonal `q`,
/// mapped back to a real field with ||psi||_2 = 1. Returns the eigenvalue.
inline double ground_state_of(const Hamiltonian& h, std::span<const double> q, RadialField& psi, double* second = nullptr) {
  const SymTridiagonal s = h.symmetrized(q);
  const double lam0 = s.eigenvalue(0);
  const double lam1 = s.eigenvalue(1);
  if (second) *second = lam1;
  const auto y = detail::lowest_eigenvector(s, lam0, lam1 - lam0);
  const auto w = h.grid().weights();
  psi = RadialField(h.grid());
  double sign = 0;
  for (double v : y) sign += v;
  sign = sign < 0 ? -1.0 : 1.0;
  for (std::size_t j = 0; j < y.size(); ++j) psi[j] = sign * y[j] / std::sqrt(w[j]);
  return lam0;
}

inline SpectralData solve_ground_eigenpair(const PotentialSpec& v, const GridSpec& grid) {
  v.validate();
  SpectralData sd;
  sd.potential = v;
  sd.hamiltonian = Hamiltonian(grid, v);
  const SymTridiagonal s = sd.hamiltonian.symmetrized();
  const std::size_t negatives = s.count_below(0.0);
  if (negatives == 0)
    throw HypothesisViolation("single-negative-eigenvalue", "H has no negative eigenvalue; the well is too shallow");
  double lam1 = 0;
  ground_state_of(sd.hamiltonian, {}, sd.psi0, &lam1);
  // Rayleigh quotient is more accurate than the bisection value.
  const RadialField hpsi = sd.hamiltonian.apply(sd.psi0);
  sd.E0 = inner_product(sd.psi0, hpsi).real();
  sd.second_eigenvalue = lam1;
  if (!(sd.E0 < 0))
    throw HypothesisViolation("single-negative-eigenvalue", "ground eigenvalue is not negative");
  if (lam1 < -1e-6 * std::abs(sd.E0))
    throw HypothesisViolation("single-negative-eigenvalue", "H has two negative eigenvalues (second = " + std::to_string(lam1) + ")");
  RadialField res = hpsi;
  res.axpy(-sd.E0, sd.psi0);
  sd.residual = lp_norm(res, 2.0);
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (!(sd.psi0[j].real() > 0))
      throw NumericError("positivity", "ground state lost positivity at node " + std::to_string(j));
  return sd;
}

/// P_c f = f - <psi0, f> psi0.
inline RadialField project_continuous(const SpectralData& sd, const RadialField& f) {
  require_same_grid(sd.grid(), f.grid());
  RadialField out = f;
  out.axpy(-inner_product(sd.psi0, f), sd.psi0);
  return out;
}

/// Smooth polynomial damping mask active on r > r_start.
struct Absorber {
  double r_start = 0;
  double strength = 0;
  int power = 2;

  bool active() const noexcept { return strength > 0; }

  /// Per-node damping factor exp(-dt * strength * s^power), s = (r - r_start)/(R_max - r_start).
  std::vector<double> mask(const GridSpec& grid, double dt) const {
    std::vector<double> m(grid.size(), 1.0);
    if (!active()) return m;
    const double width = grid.r_max() - r_start;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double r = grid.node(j);
      if (r <= r_start) continue;
      const double s = (r - r_start) / width;
      m[j] = std::exp(-dt * strength * std::pow(s, power));
    }
    return m;
  }
};

/// One Crank-Nicolson step (1 + i dt H/2) u+ = (1 - i dt H/2) u, factorized once.
class CrankNicolson {
 public:
  CrankNicolson() = default;
  CrankNicolson(const Hamiltonian& h, double dt) : dt_(dt), explicit_(h.grid().size()) {
    // dt < 0 gives the exact inverse of the forward step.
    if (dt == 0 || !std::isfinite(dt)) throw InvalidArgument("invalid-timestep", "Crank-Nicolson needs dt != 0");
    const auto& a = h.matrix();
    const std::size_t m = a.size();
    Tridiagonal<cplx> implicit(m);
    const cplx half(0.0, 0.5 * dt);
    for (std::size_t j = 0; j < m; ++j) {
      implicit.lower[j] = half * a.lower[j];
      implicit.diag[j] = 1.0 + half * a.diag[j];
      implicit.upper[j] = half * a.upper[j];
      explicit_.lower[j] = -half * a.lower[j];
      explicit_.diag[j] = 1.0 - half * a.diag[j];
      explicit_.upper[j] = -half * a.upper[j];
    }
    solver_ = TridiagonalSolver<cplx>(implicit);
    scratch_.resize(m);
  }

  double dt() const noexcept { return dt_; }

  void step(RadialField& u) {
    explicit_.multiply<cplx>(u.values(), scratch_);
    solver_.solve_in_place<cplx>(scratch_);
    std::copy(scratch_.begin(), scratch_.end(), u.values().begin());
  }

 private:
  double dt_ = 0;
  Tridiagonal<cplx> explicit_;
  TridiagonalSolver<cplx> solver_;
  std::vector<cplx> scratch_;
};

/// `steps` Crank-Nicolson steps of size dt for i u' = H u.
inline RadialField propagate_linear(const SpectralData& sd, const RadialField& f, double dt, long steps) {
  require_same_grid(sd.grid(), f.grid());
  if (!(dt > 0)) throw InvalidArgument("invalid-timestep", "propagation needs dt > 0");
  RadialField u = f;
  CrankNicolson cn(sd.hamiltonian, dt);
  for (long k = 0; k < steps; ++k) cn.step(u);
  return u;
}

}  // namespace nlscm
