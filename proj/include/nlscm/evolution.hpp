#pragma once

// Time integration of i u_t = H u + g(u) on the radial grid with an
// absorbing layer near the outer boundary.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "nlscm/error.hpp"
#include "nlscm/linear_hamiltonian.hpp"
#include "nlscm/nonlinearity.hpp"
#include "nlscm/radial_grid.hpp"

namespace nlscm {

enum class Scheme { strang_split, crank_nicolson_full };

inline std::string to_string(Scheme s) { return s == Scheme::strang_split ? "strang_split" : "crank_nicolson_full"; }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "strang_split") return Scheme::strang_split;
  if (s == "crank_nicolson_full") return Scheme::crank_nicolson_full;
  throw ConfigError("unknown scheme '" + s + "'", "evolution.scheme");
}

struct EvolutionConfig {
  double dt = 0;
  double T = 0;
  Absorber absorber;
  Scheme scheme = Scheme::strang_split;
  long frame_stride = 1;       ///< emit every `frame_stride` steps (t = 0 always emitted)
  int implicit_iterations = 3;  ///< fixed-point sweeps of the full Crank-Nicolson scheme

  long steps() const { return std::lround(T / dt); }

  void validate(const GridSpec& grid) const {
    if (!(dt > 0) || !std::isfinite(dt)) throw ConfigError("dt must be positive", "evolution.dt");
    if (!(T > 0) || !std::isfinite(T)) throw ConfigError("T must be positive", "evolution.T");
    if (std::abs(steps() * dt - T) > 1e-9 * T) throw ConfigError("T must be a multiple of dt", "evolution.T");
    if (frame_stride < 1) throw ConfigError("frame stride must be at least 1", "evolution.frame_stride");
    if (!(absorber.strength >= 0)) throw ConfigError("absorber strength must be nonnegative", "evolution.absorber.strength");
    if (!(absorber.r_start > 0 && absorber.r_start < grid.r_max()))
      throw ConfigError("absorber start must lie inside (0, R_max)", "evolution.absorber.r_start");
    if (absorber.power < 1) throw ConfigError("absorber power must be at least 1", "evolution.absorber.power");
    if (implicit_iterations < 2) throw ConfigError("need at least 2 implicit iterations", "evolution.implicit_iterations");
  }
};

struct TrajectoryFrame {
  double t = 0;
  RadialField u;
  double mass = 0;    ///< ||u||_2^2
  double energy = 0;  ///< <u, H u> + 2 int G(|u|)
};

/// E[u] = int |grad u|^2 + V |u|^2 + 2 G(|u|) dx, with the kinetic and
/// potential parts taken as the discrete <u, H u>.
inline double energy(const Hamiltonian& h, const NonlinearitySpec& g, const RadialField& u) {
  double e = inner_product(u, h.apply(u)).real();
  const auto w = u.grid().weights();
  for (std::size_t j = 0; j < u.size(); ++j) e += 2.0 * w[j] * g.potential(std::abs(u[j]));
  return e;
}

inline double energy(const RadialField& u, const PotentialSpec& v, const NonlinearitySpec& g) {
  return energy(Hamiltonian(u.grid(), v), g, u);
}

inline double mass(const RadialField& u) {
  const double n = lp_norm(u, 2.0);
  return n * n;
}

/// Stepper for one trajectory. Frames are handed to `sink` by value.
class Evolver {
 public:
  Evolver(const Hamiltonian& h, NonlinearitySpec g, EvolutionConfig cfg)
      : h_(h), g_(std::move(g)), cfg_(cfg), cn_(h, cfg.dt), mask_(cfg.absorber.mask(h.grid(), cfg.dt)) {
    cfg_.validate(h.grid());
  }

  const EvolutionConfig& config() const noexcept { return cfg_; }

  /// One time step in place.
  void step(RadialField& u) {
    if (cfg_.scheme == Scheme::strang_split) {
      rotate(u, 0.5 * cfg_.dt);
      cn_.step(u);
      rotate(u, 0.5 * cfg_.dt);
    } else {
      implicit_step(u);
    }
    if (cfg_.absorber.active())
      for (std::size_t j = 0; j < u.size(); ++j) u[j] *= mask_[j];
  }

  void run(const RadialField& u0, const std::function<void(const TrajectoryFrame&)>& sink) {
    require_same_grid(h_.grid(), u0.grid());
    if (!u0.all_finite()) throw NumericError("non-finite", "initial data contains non-finite values");
    RadialField u = u0;
    const double sup0 = lp_norm(u0, kInf);
    const double guard = 1e3 * std::max(sup0, 1e-300);
    sink(frame(0.0, u));
    const long n = cfg_.steps();
    for (long k = 1; k <= n; ++k) {
      step(u);
      const bool emit = k % cfg_.frame_stride == 0 || k == n;
      if (emit || k % 64 == 0) {
        if (!u.all_finite())
          throw NumericError("non-finite", "solution became non-finite at t = " + std::to_string(k * cfg_.dt));
        if (lp_norm(u, kInf) > guard)
          throw NumericError("instability", "sup norm exceeded 1e3 x initial at t = " + std::to_string(k * cfg_.dt));
      }
      if (emit) sink(frame(k * cfg_.dt, u));
    }
  }

 private:
  TrajectoryFrame frame(double t, const RadialField& u) const {
    TrajectoryFrame f;
    f.t = t;
    f.u = u;
    f.mass = mass(u);
    f.energy = energy(h_, g_, u);
    return f;
  }

  /// Exact flow of i u' = g(u) over time tau: |u| is invariant, so the phase rotates at rate g(|u|)/|u|.
  void rotate(RadialField& u, double tau) const {
    if (g_.is_zero()) return;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double rate = g_.ratio(std::abs(u[j]));
      u[j] *= cplx(std::cos(rate * tau), -std::sin(rate * tau));
    }
  }

  /// Cayley step with H + diag(g(|m|)/|m|) frozen at the midpoint m = (u + u+)/2,
  /// refined by fixed-point sweeps. Each sweep is unitary.
  void implicit_step(RadialField& u) const {
    const auto& a = h_.matrix();
    const std::size_t m = u.size();
    const cplx half(0.0, 0.5 * cfg_.dt);
    RadialField next = u;
    std::vector<cplx> rhs(m);
    for (int it = 0; it < cfg_.implicit_iterations; ++it) {
      Tridiagonal<cplx> lhs(m), rhs_op(m);
      for (std::size_t j = 0; j < m; ++j) {
        const double q = g_.ratio(0.5 * std::abs(u[j] + next[j]));
        lhs.lower[j] = half * a.lower[j];
        lhs.upper[j] = half * a.upper[j];
        lhs.diag[j] = 1.0 + half * (a.diag[j] + q);
        rhs_op.lower[j] = -lhs.lower[j];
        rhs_op.upper[j] = -lhs.upper[j];
        rhs_op.diag[j] = 1.0 - half * (a.diag[j] + q);
      }
      rhs_op.multiply<cplx>(u.values(), rhs);
      TridiagonalSolver<cplx>(lhs).solve_in_place<cplx>(rhs);
      std::copy(rhs.begin(), rhs.end(), next.values().begin());
    }
    u = next;
  }

  const Hamiltonian& h_;
  NonlinearitySpec g_;
  EvolutionConfig cfg_;
  CrankNicolson cn_;
  std::vector<double> mask_;
};

/// Evolves u0 and streams frames (t = 0 first, then every frame_stride steps).
inline void evolve(const RadialField& u0, const Hamiltonian& h, const NonlinearitySpec& g, const EvolutionConfig& cfg,
                   const std::function<void(const TrajectoryFrame&)>& sink) {
  Evolver(h, g, cfg).run(u0, sink);
}

inline std::vector<TrajectoryFrame> evolve(const RadialField& u0, const PotentialSpec& v, const NonlinearitySpec& g,
                                           const EvolutionConfig& cfg) {
  const Hamiltonian h(u0.grid(), v);
  std::vector<TrajectoryFrame> frames;
  evolve(u0, h, g, cfg, [&](const TrajectoryFrame& f) { frames.push_back(f); });
  return frames;
}

// ---------------------------------------------------------------------------
// Trajectory files: "NLSTR001", frame count placeholder patched on close,
// then (t, mass, energy, field record) per frame.

inline constexpr char kTrajectoryMagic[8] = {'N', 'L', 'S', 'T', 'R', '0', '0', '1'};

class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::string& path) : os_(path, std::ios::binary), path_(path) {
    if (!os_) throw FormatError("cannot open " + path + " for writing");
    os_.write(kTrajectoryMagic, 8);
    const std::int64_t zero = 0;
    os_.write(reinterpret_cast<const char*>(&zero), sizeof zero);
  }
  ~TrajectoryWriter() {
    try {
      close();
    } catch (...) {
    }
  }

  void write(const TrajectoryFrame& f) {
    os_.write(reinterpret_cast<const char*>(&f.t), sizeof f.t);
    os_.write(reinterpret_cast<const char*>(&f.mass), sizeof f.mass);
    os_.write(reinterpret_cast<const char*>(&f.energy), sizeof f.energy);
    write_binary(os_, f.u);
    ++count_;
  }

  void close() {
    if (!os_.is_open()) return;
    os_.seekp(8);
    os_.write(reinterpret_cast<const char*>(&count_), sizeof count_);
    os_.close();
    if (os_.fail()) throw FormatError("failed writing " + path_);
  }

 private:
  std::ofstream os_;
  std::string path_;
  std::int64_t count_ = 0;
};

inline std::vector<TrajectoryFrame> load_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || !std::equal(magic, magic + 8, kTrajectoryMagic)) throw FormatError(path + " is not a trajectory file");
  std::int64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!is || n < 0) throw FormatError("corrupt frame count in " + path);
  std::vector<TrajectoryFrame> frames(static_cast<std::size_t>(n));
  for (auto& f : frames) {
    is.read(reinterpret_cast<char*>(&f.t), sizeof f.t);
    is.read(reinterpret_cast<char*>(&f.mass), sizeof f.mass);
    is.read(reinterpret_cast<char*>(&f.energy), sizeof f.energy);
    if (!is) throw FormatError("truncated trajectory " + path);
    f.u = read_binary(is);
  }
  return frames;
}

/// Norm summary rows: t, mass, energy, then ||u||_p over r <= r_window for each p.
class NormSummaryWriter {
 public:
  NormSummaryWriter(const std::string& path, std::vector<double> exponents, double r_window)
      : os_(path), p_(std::move(exponents)), r_window_(r_window) {
    if (!os_) throw FormatError("cannot open " + path + " for writing");
    os_ << "t,mass,energy";
    for (double p : p_) os_ << ",L" << p;
    os_ << '\n';
    os_.precision(17);
  }

  void write(const TrajectoryFrame& f) {
    os_ << f.t << ',' << f.mass << ',' << f.energy;
    const RadialField w = window(f.u, r_window_);
    for (double p : p_) os_ << ',' << lp_norm(w, p);
    os_ << '\n';
  }

 private:
  std::ofstream os_;
  std::vector<double> p_;
  double r_window_;
};

}  // namespace nlscm
