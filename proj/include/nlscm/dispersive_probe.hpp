#pragma once

// Randomized localized probe data and sampled decay of e^{-iHt} P_c.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlscm/decay_fit.hpp"
#include "nlscm/error.hpp"
#include "nlscm/linear_hamiltonian.hpp"
#include "nlscm/radial_grid.hpp"

namespace nlscm {

/// Source or target space of a probe: L^2 with weight <r>^sigma, or L^p.
struct NormSpace {
  enum class Kind { weighted, lebesgue };
  Kind kind = Kind::lebesgue;
  double index = 2.0;  ///< sigma or p

  static NormSpace weighted(double sigma) { return {Kind::weighted, sigma}; }
  static NormSpace lebesgue(double p) { return {Kind::lebesgue, p}; }

  double norm(const RadialField& f) const {
    return kind == Kind::weighted ? weighted_l2_norm(f, index) : lp_norm(f, index);
  }

  std::string label() const {
    std::ostringstream s;
    if (kind == Kind::weighted) s << "L2_w" << index;
    else s << "L" << index;
    return s.str();
  }
};

/// Localized random data (c0 + c1 x + c2 x^2 + c3 x^3) e^{-x^2}, x = r/width,
/// complex standard normal coefficients, cut off beyond `support`, then P_c-projected.
class ProbeDataGenerator {
 public:
  ProbeDataGenerator(std::uint64_t seed, double width, double support, int degree = 3)
      : rng_(seed), width_(width), support_(support), degree_(degree) {
    if (!(width > 0)) throw ConfigError("probe data width must be positive", "probe.data_width");
    if (!(support > 0)) throw ConfigError("probe data support must be positive", "probe.data_support");
    if (degree < 0) throw ConfigError("probe polynomial degree must be nonnegative", "probe.degree");
  }

  std::vector<cplx> coefficients() {
    std::normal_distribution<double> n01;
    std::vector<cplx> c(static_cast<std::size_t>(degree_) + 1);
    for (auto& z : c) {
      const double re = n01(rng_);
      z = cplx(re, n01(rng_));
    }
    return c;
  }

  RadialField field(const GridSpec& grid, const std::vector<cplx>& c) const {
    RadialField f(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double r = grid.node(j);
      if (r > support_) break;
      const double x = r / width_;
      cplx poly = 0;
      for (std::size_t k = c.size(); k-- > 0;) poly = poly * x + c[k];
      f[j] = poly * std::exp(-x * x);
    }
    return f;
  }

  RadialField next(const SpectralData& sd) { return project_continuous(sd, field(sd.grid(), coefficients())); }

  double width() const noexcept { return width_; }
  double support() const noexcept { return support_; }

 private:
  std::mt19937_64 rng_;
  double width_, support_;
  int degree_;
};

/// Shared time-stepping and sampling settings of decay probes.
struct ProbeSettings {
  double dt = 0;
  double T = 0;
  long frame_stride = 1;
  Absorber absorber;
  double data_width = 0;
  std::uint64_t seed = 0;
  int samples = 0;
  std::pair<double, double> fit_window{2.0, 40.0};

  double data_support() const { return absorber.r_start / 4.0; }

  /// Largest T for which the fastest significant data component (group
  /// velocity 2k with k = 4/width) has not reached the absorber.
  double reliable_time() const { return (absorber.r_start - data_support()) / (8.0 / data_width); }

  void validate(const GridSpec& grid) const {
    if (!(dt > 0)) throw ConfigError("probe dt must be positive", "probe.dt");
    if (!(T > 0)) throw ConfigError("probe T must be positive", "probe.T");
    if (samples < 1) throw ConfigError("probe needs at least one sample", "probe.samples");
    if (frame_stride < 1) throw ConfigError("frame stride must be at least 1", "probe.frame_stride");
    if (!(absorber.r_start > 0 && absorber.r_start < grid.r_max()))
      throw ConfigError("absorber start must lie inside (0, R_max)", "probe.absorber.r_start");
    if (!(data_width > 0)) throw ConfigError("probe data width must be positive", "probe.data_width");
    if (T > reliable_time() * (1 + 1e-12)) {
      std::ostringstream msg;
      msg << "T = " << T << " exceeds the reliable window " << reliable_time() << " for r_start = " << absorber.r_start;
      throw WindowViolation(msg.str());
    }
  }
};

struct LinearDecayProbe {
  DecayTrace weighted;  ///< sample-max ||e^{-iHt}P_c v||_{L^2_{-sigma}} / ||v||_{L^2_sigma}
  DecayTrace lp;        ///< sample-max ||e^{-iHt}P_c v||_{L^p} / ||v||_{L^{p'}}
};

/// Sampled decay of the linear flow on the continuous subspace. Norms are
/// taken over r <= r_start.
inline LinearDecayProbe probe_linear_decay(const SpectralData& sd, double sigma, double p, const ProbeSettings& s) {
  s.validate(sd.grid());
  if (!(sigma > sd.grid().dim() / 2.0))
    throw InvalidArgument("invalid-weight", "weighted probe needs sigma > N/2");
  if (!(p >= 2)) throw InvalidArgument("invalid-exponent", "probe exponent p must be >= 2");
  const double pc = conjugate_exponent(p);
  ProbeDataGenerator gen(s.seed, s.data_width, s.data_support());
  const long steps = std::lround(s.T / s.dt);
  const std::vector<double> mask = s.absorber.mask(sd.grid(), s.dt);
  CrankNicolson cn(sd.hamiltonian, s.dt);

  LinearDecayProbe out;
  out.weighted.label = "linear " + NormSpace::weighted(sigma).label() + "->" + NormSpace::weighted(-sigma).label();
  out.lp.label = "linear L" + std::to_string(pc) + "->L" + std::to_string(p);
  out.weighted.fit_window = out.lp.fit_window = s.fit_window;
  for (long k = s.frame_stride; k <= steps; k += s.frame_stride) {
    out.weighted.push(k * s.dt, 0.0);
    out.lp.push(k * s.dt, 0.0);
  }
  for (int i = 0; i < s.samples; ++i) {
    RadialField u = gen.next(sd);
    const double src_w = weighted_l2_norm(u, sigma), src_p = lp_norm(u, pc);
    std::size_t frame = 0;
    for (long k = 1; k <= steps; ++k) {
      cn.step(u);
      if (s.absorber.active())
        for (std::size_t j = 0; j < u.size(); ++j) u[j] *= mask[j];
      if (k % s.frame_stride) continue;
      const RadialField w = window(u, s.absorber.r_start);
      out.weighted.values[frame] = std::max(out.weighted.values[frame], weighted_l2_norm(w, -sigma) / src_w);
      out.lp.values[frame] = std::max(out.lp.values[frame], lp_norm(w, p) / src_p);
      ++frame;
    }
  }
  return out;
}

}  // namespace nlscm
