#pragma once

// Radially symmetric functions on R^N sampled on a cell-centered grid.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nlscm/error.hpp"

namespace nlscm {

using cplx = std::complex<double>;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Surface measure of the unit sphere S^{N-1}: 2 pi^{N/2} / Gamma(N/2).
inline double sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

/// Uniform cell-centered radial grid on [0, r_max]. Node j sits at
/// (j + 1/2) h, cell j spans [j h, (j + 1) h].
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(int dim, double r_max, std::int64_t points) : dim_(dim), r_max_(r_max), points_(points) {
    if (dim != 4 && dim != 5) throw ConfigError("grid dimension must be 4 or 5, got " + std::to_string(dim), "grid.dimension");
    if (points < 2) throw ConfigError("grid needs at least 2 points", "grid.points");
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ConfigError("grid R_max must be positive", "grid.r_max");
    build();
  }

  int dim() const noexcept { return dim_; }
  double r_max() const noexcept { return r_max_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(points_); }
  double spacing() const noexcept { return r_max_ / static_cast<double>(points_); }
  double node(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * spacing(); }
  double face(std::size_t j) const noexcept { return static_cast<double>(j) * spacing(); }
  std::span<const double> nodes() const noexcept { return nodes_; }

  /// Quadrature weights: omega_{N-1} times the exact volume of cell j, so
  /// that sum_j w_j f(r_j) approximates the integral over R^N.
  std::span<const double> weights() const noexcept { return weights_; }

  /// Index of the last node with r_j <= r.
  std::size_t index_at_or_below(double r) const noexcept {
    const double x = r / spacing() - 0.5;
    if (x < 0) return 0;
    return std::min(size() - 1, static_cast<std::size_t>(std::floor(x)));
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.dim_ == b.dim_ && a.r_max_ == b.r_max_ && a.points_ == b.points_;
  }

 private:
  void build() {
    const std::size_t m = size();
    const double area = sphere_area(dim_);
    nodes_.resize(m);
    weights_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      nodes_[j] = node(j);
      const double lo = face(j), hi = face(j + 1);
      weights_[j] = area * (std::pow(hi, dim_) - std::pow(lo, dim_)) / dim_;
    }
  }

  int dim_ = 4;
  double r_max_ = 1.0;
  std::int64_t points_ = 2;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw IncompatibleGrid("fields live on different grids");
}

/// Complex samples f(r_j) of a radial function.
class RadialField {
 public:
  RadialField() = default;
  explicit RadialField(GridSpec grid) : grid_(std::move(grid)), values_(grid_.size(), cplx{}) {}
  RadialField(GridSpec grid, std::vector<cplx> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw InvalidArgument("field-size", "value count does not match grid size");
  }

  template <class F>
  static RadialField from_function(const GridSpec& grid, F&& f) {
    RadialField out(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) out[j] = cplx(f(grid.node(j)));
    return out;
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  cplx& operator[](std::size_t j) noexcept { return values_[j]; }
  const cplx& operator[](std::size_t j) const noexcept { return values_[j]; }
  std::span<cplx> values() noexcept { return values_; }
  std::span<const cplx> values() const noexcept { return values_; }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(),
                       [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  RadialField& operator+=(const RadialField& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t j = 0; j < size(); ++j) values_[j] += o.values_[j];
    return *this;
  }
  RadialField& operator-=(const RadialField& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t j = 0; j < size(); ++j) values_[j] -= o.values_[j];
    return *this;
  }
  RadialField& operator*=(cplx c) {
    for (auto& v : values_) v *= c;
    return *this;
  }
  /// this += c * o
  RadialField& axpy(cplx c, const RadialField& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t j = 0; j < size(); ++j) values_[j] += c * o.values_[j];
    return *this;
  }

  friend RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
  friend RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
  friend RadialField operator*(cplx c, RadialField a) { return a *= c; }
  friend RadialField operator*(double c, RadialField a) { return a *= cplx(c); }

 private:
  GridSpec grid_;
  std::vector<cplx> values_;
};

/// Copy of `f` with every sample beyond `r_cut` set to zero.
inline RadialField window(const RadialField& f, double r_cut) {
  RadialField out = f;
  for (std::size_t j = 0; j < out.size(); ++j)
    if (f.grid().node(j) > r_cut) out[j] = 0.0;
  return out;
}

inline RadialField real_part(const RadialField& f) {
  RadialField out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j].real();
  return out;
}

// ---------------------------------------------------------------------------
// Norms and inner products

inline double lp_norm(const RadialField& f, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("invalid-exponent", "L^p norm needs p >= 1");
  if (std::isinf(p)) {
    double m = 0;
    for (auto z : f.values()) m = std::max(m, std::abs(z));
    return m;
  }
  const auto w = f.grid().weights();
  double s = 0;
  if (p == 2.0) {
    for (std::size_t j = 0; j < f.size(); ++j) s += w[j] * std::norm(f[j]);
    return std::sqrt(s);
  }
  for (std::size_t j = 0; j < f.size(); ++j) s += w[j] * std::pow(std::abs(f[j]), p);
  return std::pow(s, 1.0 / p);
}

/// || <r>^sigma f ||_2 with <r> = (1 + r^2)^{1/2}.
inline double weighted_l2_norm(const RadialField& f, double sigma) {
  const auto w = f.grid().weights();
  double s = 0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double r = f.grid().node(j);
    s += w[j] * std::pow(1.0 + r * r, sigma) * std::norm(f[j]);
  }
  return std::sqrt(s);
}

/// <f, g> = int conj(f) g, conjugate-linear in the first slot.
inline cplx inner_product(const RadialField& f, const RadialField& g) {
  require_same_grid(f.grid(), g.grid());
  const auto w = f.grid().weights();
  cplx s{};
  for (std::size_t j = 0; j < f.size(); ++j) s += w[j] * std::conj(f[j]) * g[j];
  return s;
}

/// Hoelder conjugate exponent p' with 1/p + 1/p' = 1.
inline double conjugate_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

// ---------------------------------------------------------------------------
// Radial Laplacian

/// Three-point divergence-form stencil of Delta = d^2/dr^2 + (N-1)/r d/dr.
/// Row j reads lower[j] f_{j-1} + diag[j] f_j + upper[j] f_{j+1}. Zero
/// flux through r = 0, Dirichlet f(R_max) = 0 imposed at the outer face
/// through an odd ghost value.
struct LaplacianStencil {
  std::vector<double> lower, diag, upper;

  explicit LaplacianStencil(const GridSpec& grid) {
    const std::size_t m = grid.size();
    const int n = grid.dim();
    const double h = grid.spacing();
    const double area = sphere_area(n);
    lower.assign(m, 0.0);
    diag.assign(m, 0.0);
    upper.assign(m, 0.0);
    const auto w = grid.weights();
    for (std::size_t j = 0; j < m; ++j) {
      const double vol = w[j] / area;
      const double flux_in = std::pow(grid.face(j), n - 1) / h;
      const double flux_out = std::pow(grid.face(j + 1), n - 1) / h;
      lower[j] = flux_in / vol;
      if (j + 1 < m) {
        upper[j] = flux_out / vol;
        diag[j] = -(flux_in + flux_out) / vol;
      } else {
        diag[j] = -(flux_in + 2.0 * flux_out) / vol;
      }
    }
  }
};

inline RadialField apply_laplacian(const RadialField& f) {
  const std::size_t m = f.size();
  if (m < 3) throw InvalidArgument("grid-too-small", "Laplacian needs at least 3 points");
  const LaplacianStencil st(f.grid());
  RadialField out(f.grid());
  for (std::size_t j = 0; j < m; ++j) {
    cplx v = st.diag[j] * f[j];
    if (j > 0) v += st.lower[j] * f[j - 1];
    if (j + 1 < m) v += st.upper[j] * f[j + 1];
    out[j] = v;
  }
  return out;
}

/// Centered first radial derivative (one-sided at the ends; even symmetry at r = 0).
inline RadialField radial_derivative(const RadialField& f) {
  const std::size_t m = f.size();
  const double h = f.grid().spacing();
  RadialField out(f.grid());
  for (std::size_t j = 0; j < m; ++j) {
    const cplx left = j == 0 ? f[0] : f[j - 1];
    const cplx right = j + 1 < m ? f[j + 1] : cplx{0.0};
    out[j] = (right - left) / (2.0 * h);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {
inline constexpr char kFieldMagic[8] = {'N', 'L', 'S', 'R', 'F', '0', '0', '1'};

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("unexpected end of binary stream");
  return v;
}
}  // namespace detail

/// Binary layout: 8-byte magic, int32 N, float64 R_max, int64 M, then M
/// pairs of float64 (Re, Im). Native endianness.
inline void write_binary(std::ostream& os, const RadialField& f) {
  os.write(detail::kFieldMagic, sizeof detail::kFieldMagic);
  detail::write_pod<std::int32_t>(os, f.grid().dim());
  detail::write_pod<double>(os, f.grid().r_max());
  detail::write_pod<std::int64_t>(os, static_cast<std::int64_t>(f.size()));
  for (auto z : f.values()) {
    detail::write_pod<double>(os, z.real());
    detail::write_pod<double>(os, z.imag());
  }
}

inline RadialField read_binary(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, detail::kFieldMagic, sizeof magic) != 0)
    throw FormatError("not a radial field binary record");
  const auto n = detail::read_pod<std::int32_t>(is);
  const auto r_max = detail::read_pod<double>(is);
  const auto m = detail::read_pod<std::int64_t>(is);
  GridSpec grid(n, r_max, m);
  RadialField f(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double re = detail::read_pod<double>(is);
    const double im = detail::read_pod<double>(is);
    f[j] = {re, im};
  }
  return f;
}

inline void save_binary(const std::string& path, const RadialField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  write_binary(os, f);
}

inline RadialField load_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return read_binary(is);
}

/// CSV: a `# N=..,R_max=..,M=..` header, a column header, then r,re,im rows.
inline void write_csv(std::ostream& os, const RadialField& f) {
  os << "# N=" << f.grid().dim() << ",R_max=" << std::setprecision(17) << f.grid().r_max()
     << ",M=" << f.size() << "\n";
  os << "r,re,im\n";
  for (std::size_t j = 0; j < f.size(); ++j)
    os << f.grid().node(j) << ',' << f[j].real() << ',' << f[j].imag() << '\n';
}

inline RadialField read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# N=", 0) != 0) throw FormatError("missing CSV grid header");
  int n = 0;
  double r_max = 0;
  long long m = 0;
  if (std::sscanf(line.c_str(), "# N=%d,R_max=%lf,M=%lld", &n, &r_max, &m) != 3)
    throw FormatError("malformed CSV grid header: " + line);
  std::getline(is, line);
  GridSpec grid(n, r_max, m);
  RadialField f(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!std::getline(is, line)) throw FormatError("CSV ended after " + std::to_string(j) + " rows");
    double r, re, im;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &r, &re, &im) != 3) throw FormatError("bad CSV row: " + line);
    f[j] = {re, im};
  }
  return f;
}

}  // namespace nlscm
