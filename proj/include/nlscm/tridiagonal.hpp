#pragma once

// Banded helpers: Thomas solves and Sturm-sequence eigenvalue counting.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "nlscm/error.hpp"

namespace nlscm {

/// Tridiagonal matrix stored by diagonals; row j is
/// lower[j] x_{j-1} + diag[j] x_j + upper[j] x_{j+1}. lower[0] and
/// upper[n-1] are ignored.
template <class T>
struct Tridiagonal {
  std::vector<T> lower, diag, upper;

  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : lower(n), diag(n), upper(n) {}
  std::size_t size() const noexcept { return diag.size(); }

  template <class V>
  void multiply(std::span<const V> x, std::span<V> y) const {
    const std::size_t n = size();
    for (std::size_t j = 0; j < n; ++j) {
      V v = diag[j] * x[j];
      if (j > 0) v += lower[j] * x[j - 1];
      if (j + 1 < n) v += upper[j] * x[j + 1];
      y[j] = v;
    }
  }
};

/// LU factorization without pivoting, reusable across right-hand sides.
template <class T>
class TridiagonalSolver {
 public:
  TridiagonalSolver() = default;
  explicit TridiagonalSolver(const Tridiagonal<T>& a) : lower_(a.lower), c_(a.size()), inv_pivot_(a.size()) {
    const std::size_t n = a.size();
    if (n == 0) return;
    T pivot = a.diag[0];
    for (std::size_t j = 0; j < n; ++j) {
      if (j > 0) pivot = a.diag[j] - a.lower[j] * c_[j - 1];
      if (std::abs(pivot) == 0.0 || !std::isfinite(std::abs(pivot)))
        throw NumericError("singular-tridiagonal", "zero pivot in tridiagonal factorization at row " + std::to_string(j));
      inv_pivot_[j] = T(1) / pivot;
      c_[j] = j + 1 < n ? a.upper[j] * inv_pivot_[j] : T(0);
    }
  }

  std::size_t size() const noexcept { return c_.size(); }

  /// Solves A x = rhs in place.
  template <class V>
  void solve_in_place(std::span<V> x) const {
    const std::size_t n = size();
    if (n == 0) return;
    x[0] = x[0] * inv_pivot_[0];
    for (std::size_t j = 1; j < n; ++j) x[j] = (x[j] - lower_[j] * x[j - 1]) * inv_pivot_[j];
    for (std::size_t j = n - 1; j-- > 0;) x[j] -= c_[j] * x[j + 1];
  }

 private:
  std::vector<T> lower_;
  std::vector<T> c_;
  std::vector<T> inv_pivot_;
};

/// Symmetric real tridiagonal matrix (diag d, off-diagonal e[j] coupling j and j+1).
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // size n-1

  std::size_t size() const noexcept { return diag.size(); }

  /// Number of eigenvalues strictly below x (Sturm sequence).
  std::size_t count_below(double x) const {
    std::size_t count = 0;
    double q = 1.0;
    for (std::size_t j = 0; j < size(); ++j) {
      const double e2 = j > 0 ? off[j - 1] * off[j - 1] : 0.0;
      q = diag[j] - x - (j > 0 ? e2 / q : 0.0);
      if (q == 0.0) q = -1e-300;
      if (q < 0) ++count;
    }
    return count;
  }

  /// Gershgorin enclosure of the spectrum.
  std::pair<double, double> bounds() const {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t j = 0; j < size(); ++j) {
      double r = 0;
      if (j > 0) r += std::abs(off[j - 1]);
      if (j + 1 < size()) r += std::abs(off[j]);
      lo = std::min(lo, diag[j] - r);
      hi = std::max(hi, diag[j] + r);
    }
    return {lo, hi};
  }

  /// k-th smallest eigenvalue (k = 0 is the lowest) by bisection.
  double eigenvalue(std::size_t k, double tol = 0.0) const {
    auto [lo, hi] = bounds();
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi || hi - lo <= tol) break;
      if (count_below(mid) > k) hi = mid;
      else lo = mid;
    }
    return 0.5 * (lo + hi);
  }
};

}  // namespace nlscm
