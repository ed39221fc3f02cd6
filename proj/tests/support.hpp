#pragma once

#include <complex>
#include <memory>
#include <random>

#include "nlscm/nlscm.hpp"

namespace nlscm::test {

inline RadialField random_field(const GridSpec& grid, std::uint64_t seed, double support = kInf) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  RadialField f(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid.node(j) > support) break;
    const double re = n01(rng);
    f[j] = cplx(re, n01(rng));
  }
  return f;
}

inline RadialField gaussian(const GridSpec& grid, double width, cplx amp = 1.0) {
  return RadialField::from_function(grid, [&](double r) { return amp * std::exp(-r * r / (width * width)); });
}

inline PotentialSpec well(double depth, double width = 1.0) {
  PotentialSpec v;
  v.form = PotentialForm::gaussian_well;
  v.depth = depth;
  v.width = width;
  return v;
}

/// Small reference problem: Gaussian well (V0=10 for N=4, 20 for N=5), R=40, M=1024.
inline std::shared_ptr<const SpectralData> small_spectrum(int dim = 4) {
  static std::shared_ptr<const SpectralData> s4, s5;
  auto& slot = dim == 4 ? s4 : s5;
  if (!slot) slot = std::make_shared<SpectralData>(solve_ground_eigenpair(well(dim == 4 ? 10.0 : 20.0), GridSpec(dim, 40.0, 1024)));
  return slot;
}

inline NonlinearitySpec focusing(int dim, double alpha) { return NonlinearitySpec(dim, {{-1.0, alpha}}); }

inline std::shared_ptr<const BoundStateBranch> small_branch(int dim = 4, double alpha = 1.2) {
  static std::map<std::pair<int, double>, std::shared_ptr<const BoundStateBranch>> cache;
  auto& slot = cache[{dim, alpha}];
  if (!slot)
    slot = std::make_shared<const BoundStateBranch>(continue_branch(small_spectrum(dim), focusing(dim, alpha), 0.5, 256, {}));
  return slot;
}

}  // namespace nlscm::test
