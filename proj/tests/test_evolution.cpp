#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace nlscm;
using nlscm::test::gaussian;
using nlscm::test::small_branch;
using nlscm::test::small_spectrum;

namespace {

EvolutionConfig config(double dt, double T, Scheme scheme = Scheme::strang_split) {
  EvolutionConfig c;
  c.dt = dt;
  c.T = T;
  c.scheme = scheme;
  c.absorber = {30.0, 0.0, 2};  // inactive
  c.frame_stride = std::lround(T / dt);
  return c;
}

RadialField final_state(const RadialField& u0, const Hamiltonian& h, const NonlinearitySpec& g, const EvolutionConfig& c) {
  RadialField out;
  evolve(u0, h, g, c, [&](const TrajectoryFrame& f) { out = f.u; });
  return out;
}

}  // namespace

TEST(EvolutionConfig, ValidationNamesFields) {
  const GridSpec g(4, 40.0, 100);
  auto expect_field = [&](EvolutionConfig c, const std::string& field) {
    try {
      c.validate(g);
      FAIL() << field;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.field(), field);
    }
  };
  EvolutionConfig c = config(0.01, 1.0);
  EXPECT_NO_THROW(c.validate(g));
  auto bad = c;
  bad.dt = -0.01;
  expect_field(bad, "evolution.dt");
  bad = c;
  bad.T = 1.005;
  expect_field(bad, "evolution.T");
  bad = c;
  bad.absorber.r_start = 50;
  expect_field(bad, "evolution.absorber.r_start");
  bad = c;
  bad.absorber.strength = -1;
  expect_field(bad, "evolution.absorber.strength");
  EXPECT_THROW(scheme_from_string("leapfrog"), ConfigError);
  EXPECT_EQ(scheme_from_string("crank_nicolson_full"), Scheme::crank_nicolson_full);
}

TEST(Energy, ZeroAndEigenpair) {
  const auto sd = small_spectrum();
  const auto g = NonlinearitySpec(4, {{-1.0, 1.2}});
  EXPECT_EQ(energy(sd->hamiltonian, g, RadialField(sd->grid())), 0.0);
  EXPECT_NEAR(energy(sd->psi0, sd->potential, NonlinearitySpec::zero(4)), sd->E0, 1e-12);
}

TEST(Evolve, EigenmodeAmplitudeConstant) {
  const auto sd = small_spectrum();
  const double eps = 0.01;
  auto c = config(0.01, 10.0);
  c.frame_stride = 10;
  evolve(eps * sd->psi0, sd->hamiltonian, NonlinearitySpec::zero(4), c, [&](const TrajectoryFrame& f) {
    EXPECT_NEAR(std::abs(inner_product(sd->psi0, f.u)), eps, 1e-10);
  });
}

TEST(Evolve, BoundStateIsPeriodicOrbit) {
  const auto b = small_branch();
  const auto& node = b->nodes()[128];
  // At dt = 0.01 the Crank-Nicolson phase error E^3 dt^2/12 alone is ~1e-6 per unit time.
  auto c = config(0.005, 5.0);
  c.frame_stride = 200;
  evolve(node.psi, b->spectrum().hamiltonian, b->nonlinearity(), c, [&](const TrajectoryFrame& f) {
    const RadialField exact = std::polar(1.0, -node.E * f.t) * node.psi;
    EXPECT_LT(lp_norm(f.u - exact, 2.0), 1e-6 * std::max(f.t, 1.0)) << "t=" << f.t;
  });
}

TEST(Evolve, MassConservedWithoutAbsorber) {
  const auto b = small_branch();
  const RadialField u0 = eval_manifold(*b, 0.25).psi + gaussian(b->grid(), 3.0, 0.05);
  for (Scheme s : {Scheme::strang_split, Scheme::crank_nicolson_full}) {
    auto c = config(0.01, 100.0, s);
    c.frame_stride = 1000;
    const double m0 = mass(u0);
    evolve(u0, b->spectrum().hamiltonian, b->nonlinearity(), c, [&](const TrajectoryFrame& f) {
      EXPECT_LT(std::abs(std::sqrt(f.mass) - std::sqrt(m0)), 1e-9 * std::sqrt(m0)) << to_string(s) << " t=" << f.t;
      EXPECT_NEAR(f.mass, mass(f.u), 1e-15 * f.mass);
    });
  }
}

TEST(Evolve, EnergyDriftSmallWithoutAbsorber) {
  const auto b = small_branch();
  const RadialField u0 = eval_manifold(*b, 0.25).psi + gaussian(b->grid(), 3.0, 0.05);
  // The energy error is a bounded O(dt^2) oscillation: 4.9e-6 relative at dt = 0.01.
  auto c = config(0.0025, 50.0);
  c.frame_stride = 400;
  double e0 = 0, worst = 0;
  evolve(u0, b->spectrum().hamiltonian, b->nonlinearity(), c, [&](const TrajectoryFrame& f) {
    if (f.t == 0) e0 = f.energy;
    worst = std::max(worst, std::abs(f.energy - e0));
  });
  EXPECT_LT(worst, 1e-6 * std::abs(e0));
}

TEST(Evolve, SecondOrderInTime) {
  const auto b = small_branch();
  const RadialField u0 = eval_manifold(*b, 0.25).psi + gaussian(b->grid(), 3.0, 0.05);
  const auto& h = b->spectrum().hamiltonian;
  for (Scheme s : {Scheme::strang_split, Scheme::crank_nicolson_full}) {
    const RadialField ref = final_state(u0, h, b->nonlinearity(), config(0.0025, 2.0, s));
    const double e1 = lp_norm(final_state(u0, h, b->nonlinearity(), config(0.02, 2.0, s)) - ref, 2.0);
    const double e2 = lp_norm(final_state(u0, h, b->nonlinearity(), config(0.01, 2.0, s)) - ref, 2.0);
    // Second order: the error against the dt/4 reference drops about 4x per halving.
    EXPECT_NEAR(e1 / e2, 4.0, 0.6) << to_string(s);
  }
}

TEST(Evolve, GaugeCovariant) {
  const auto b = small_branch();
  const RadialField u0 = eval_manifold(*b, 0.25).psi + gaussian(b->grid(), 3.0, cplx(0.03, 0.04));
  const cplx rot = std::polar(1.0, 1.1);
  for (Scheme s : {Scheme::strang_split, Scheme::crank_nicolson_full}) {
    const auto c = config(0.01, 2.0, s);
    const RadialField a = final_state(u0, b->spectrum().hamiltonian, b->nonlinearity(), c);
    const RadialField r = final_state(rot * u0, b->spectrum().hamiltonian, b->nonlinearity(), c);
    EXPECT_LT(lp_norm(r - rot * a, 2.0), 1e-12 * lp_norm(a, 2.0)) << to_string(s);
  }
}

TEST(Evolve, AbsorberActsOnlyOutside) {
  const auto b = small_branch();
  const auto& node = b->nodes()[128];
  auto c = config(0.01, 5.0);
  c.absorber = {30.0, 5.0, 2};
  const RadialField u = final_state(node.psi, b->spectrum().hamiltonian, b->nonlinearity(), c);
  const double inner0 = mass(window(node.psi, 15.0)), inner1 = mass(window(u, 15.0));
  EXPECT_LT(std::abs(inner1 - inner0), 1e-10 * inner0);
  // An outgoing pulse loses mass once it reaches the layer.
  const RadialField pulse = RadialField::from_function(b->grid(), [](double r) { return std::exp(-(r - 25) * (r - 25)) * std::polar(1.0, 3 * r); });
  c.T = 10.0;
  c.frame_stride = 1000;
  const RadialField out = final_state(pulse, b->spectrum().hamiltonian, NonlinearitySpec::zero(4), c);
  EXPECT_LT(mass(out), 0.5 * mass(pulse));
}

TEST(Evolve, DetectsNonFiniteData) {
  const auto sd = small_spectrum();
  RadialField u = sd->psi0;
  u[3] = cplx(std::nan(""), 0);
  EXPECT_THROW(final_state(u, sd->hamiltonian, NonlinearitySpec::zero(4), config(0.01, 0.1)), NumericError);
}

TEST(Evolve, BlowUpGuard) {
  // An incoming spherical shell in N=5 focuses at the origin with gain far above 1e3.
  const GridSpec grid(5, 40.0, 4000);
  const Hamiltonian h(grid, std::vector<double>(grid.size(), 0.0));
  const RadialField shell = RadialField::from_function(grid, [](double r) { return std::exp(-(r - 30) * (r - 30)) * std::polar(1.0, 4 * r); });
  try {
    final_state(shell, h, NonlinearitySpec::zero(5), config(0.005, 6.0));
    FAIL() << "guard did not trigger";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.kind(), "instability");
  }
}

TEST(Evolve, FramesAtStride) {
  const auto sd = small_spectrum();
  auto c = config(0.01, 1.0);
  c.frame_stride = 30;
  const auto frames = evolve(sd->psi0, sd->potential, NonlinearitySpec::zero(4), c);
  std::vector<double> t;
  for (const auto& f : frames) t.push_back(f.t);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_NEAR(t[1], 0.3, 1e-12);
  EXPECT_NEAR(t.back(), 1.0, 1e-12);
}

TEST(TrajectoryFile, RoundTripAndCorruption) {
  const auto dir = std::filesystem::temp_directory_path() / "nlscm_traj_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "t.bin").string();
  const auto sd = small_spectrum();
  auto c = config(0.01, 0.5);
  c.frame_stride = 10;
  const auto frames = evolve(gaussian(sd->grid(), 2.0), sd->potential, NonlinearitySpec(4, {{-1.0, 1.2}}), c);
  {
    TrajectoryWriter w(path);
    for (const auto& f : frames) w.write(f);
  }
  const auto back = load_trajectory(path);
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    EXPECT_EQ(back[k].t, frames[k].t);
    EXPECT_EQ(back[k].energy, frames[k].energy);
    EXPECT_EQ(lp_norm(back[k].u - frames[k].u, kInf), 0.0);
  }
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 100);
  EXPECT_THROW(load_trajectory(path), FormatError);
  std::filesystem::remove_all(dir);
}

TEST(NormSummary, CsvColumns) {
  const auto dir = std::filesystem::temp_directory_path() / "nlscm_norms_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "n.csv").string();
  const auto sd = small_spectrum();
  TrajectoryFrame f;
  f.u = sd->psi0;
  f.mass = 1.0;
  {
    NormSummaryWriter w(path, {2.0, 3.2}, 20.0);
    w.write(f);
  }
  std::ifstream is(path);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "t,mass,energy,L2,L3.2");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 4);
  std::filesystem::remove_all(dir);
}
