#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace nlscm;
using nlscm::test::gaussian;
using nlscm::test::small_branch;

namespace {

std::vector<TrajectoryFrame> run(const RadialField& u0, const BoundStateBranch& b, double dt, double T, long stride) {
  EvolutionConfig c;
  c.dt = dt;
  c.T = T;
  c.frame_stride = stride;
  c.absorber = {30.0, 5.0, 2};
  std::vector<TrajectoryFrame> frames;
  evolve(u0, b.spectrum().hamiltonian, b.nonlinearity(), c, [&](const TrajectoryFrame& f) { frames.push_back(f); });
  return frames;
}

RadialField small_data(const BoundStateBranch& b, cplx a0 = 0.25) {
  return eval_manifold(b, a0).psi + project_continuous(b.spectrum(), gaussian(b.grid(), 3.0, 0.05));
}

ModulationTrace analyze(const std::vector<TrajectoryFrame>& frames, const BoundStateBranch& b) {
  ModulationAnalyzer an(b, {3.2}, 30.0);
  for (const auto& f : frames) an.consume(f);
  return an.take();
}

double max_finite(const std::vector<double>& v) {
  double m = 0;
  for (double x : v)
    if (std::isfinite(x)) m = std::max(m, x);
  return m;
}

}  // namespace

TEST(Decompose, ManifoldPointHasNoRadiation) {
  const auto b = small_branch();
  const auto& node = b->nodes()[100];
  const Decomposition d = decompose(node.psi, *b);
  EXPECT_NEAR(std::abs(d.a - node.a), 0.0, 1e-15);
  EXPECT_LT(lp_norm(d.r, 2.0), 1e-14);
  EXPECT_EQ(d.E, eval_manifold(*b, d.a).E);
}

TEST(Decompose, PurelyRadiativeData) {
  const auto b = small_branch();
  const RadialField u = project_continuous(b->spectrum(), gaussian(b->grid(), 2.0, cplx(0.02, 0.01)));
  const Decomposition d = decompose(u, *b);
  EXPECT_LT(std::abs(d.a), 1e-16);
  EXPECT_LT(lp_norm(d.r - u, 2.0), 1e-15);
}

TEST(Decompose, OrthogonalForRandomData) {
  const auto b = small_branch();
  for (std::uint64_t s = 0; s < 10; ++s) {
    RadialField u = test::random_field(b->grid(), s, 20.0);
    u *= 0.3 / lp_norm(u, 2.0);
    const Decomposition d = decompose(u, *b);
    EXPECT_LT(std::abs(inner_product(b->spectrum().psi0, d.r)), 1e-10 * lp_norm(u, 2.0));
  }
}

TEST(Decompose, AmplitudeBeyondBranch) {
  const auto b = small_branch();
  EXPECT_THROW(decompose(0.8 * b->spectrum().psi0, *b), OutOfRange);
}

TEST(ModulationRhs, SpecialCases) {
  const auto b = small_branch();
  const auto& node = b->nodes()[64];
  const cplx rhs = modulation_rhs(node.a, RadialField(b->grid()), *b);
  EXPECT_LT(std::abs(rhs - cplx(0, -1) * node.E * node.a), 1e-15);
  const RadialField r = gaussian(b->grid(), 2.0, 0.1);
  const cplx at_zero = modulation_rhs(0.0, r, *b);
  const cplx expected = cplx(0, -1) * inner_product(b->spectrum().psi0, g_apply(b->nonlinearity(), r));
  EXPECT_LT(std::abs(at_zero - expected), 1e-15);
}

TEST(ModulationRhs, ClosesAtSecondOrder) {
  const auto b = small_branch();
  const RadialField u0 = small_data(*b);
  double res[2];
  double scale = 0;
  for (int i = 0; i < 2; ++i) {
    const auto tr = analyze(run(u0, *b, i ? 0.01 : 0.02, 4.0, 1), *b);
    res[i] = max_finite(tr.ode_residual);
    scale = max_finite(tr.rhs_modulus);
  }
  EXPECT_NEAR(res[0] / res[1], 4.0, 1.2);
  EXPECT_LT(res[1], 1e-3 * scale);
}

TEST(ModulationRhs, IntegratedResidualSmallAgainstPhaseWinding) {
  const auto b = small_branch();
  const auto tr = analyze(run(small_data(*b), *b, 0.01, 10.0, 1), *b);
  double drift = 0, winding = 0;
  for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
    const double dt = tr.times[k + 1] - tr.times[k];
    drift += tr.ode_residual[k] / std::abs(tr.a[k]) * dt;
    winding += std::abs(tr.E[k]) * dt;
  }
  EXPECT_LT(drift, 0.01 * winding);
}

TEST(RadiationResidual, VanishesOnBoundState) {
  const auto b = small_branch();
  const auto frames = run(b->nodes()[128].psi, *b, 0.01, 0.02, 1);
  ASSERT_EQ(frames.size(), 3u);
  EXPECT_LT(radiation_residual(frames[0], frames[1], frames[2], *b, 2.5), 1e-6);
}

TEST(RadiationResidual, SecondOrderAndNeedsDh) {
  const auto b = small_branch();
  const RadialField u0 = small_data(*b);
  double res[2], ablated = 0;
  for (int i = 0; i < 2; ++i) {
    const double dt = i ? 0.005 : 0.01;
    const long target = std::lround(1.0 / dt);
    const auto frames = run(u0, *b, dt, 1.0 + dt, 1);
    res[i] = radiation_residual(frames[target - 1], frames[target], frames[target + 1], *b, 2.5);
    if (i) ablated = radiation_residual(frames[target - 1], frames[target], frames[target + 1], *b, 2.5, false);
  }
  EXPECT_NEAR(res[0] / res[1], 4.0, 1.2);
  EXPECT_GT(ablated, 3 * res[1]);
}

TEST(RadiationResidual, RejectsUnevenFrames) {
  const auto b = small_branch();
  auto frames = run(b->nodes()[128].psi, *b, 0.01, 0.02, 1);
  frames[2].t = 0.05;
  EXPECT_THROW(radiation_residual(frames[0], frames[1], frames[2], *b, 2.5), InvalidArgument);
}

TEST(GaugeRemoved, BoundStateRunIsConstant) {
  const auto b = small_branch();
  const auto& node = b->nodes()[128];
  const auto tr = analyze(run(node.psi, *b, 0.01, 10.0, 10), *b);
  const auto at = gauge_removed_a(tr);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_NEAR(std::abs(at[k]), std::abs(tr.a[k]), 1e-15);
    EXPECT_LT(std::abs(at[k] - at[0]), 1e-4 * node.a);
  }
  const AsymptoticReport rep = asymptotic_report(tr, *b);
  EXPECT_TRUE(rep.settled);
  EXPECT_NEAR(rep.a_inf, node.a, 1e-8);
  for (double th : rep.theta) EXPECT_LT(std::abs(th), 1e-8);
}

TEST(GaugeRemoved, GaugeCovariantTrace) {
  const auto b = small_branch();
  const RadialField u0 = small_data(*b);
  const cplx rot = std::polar(1.0, 2.0);
  const auto t1 = analyze(run(u0, *b, 0.01, 2.0, 10), *b);
  const auto t2 = analyze(run(rot * u0, *b, 0.01, 2.0, 10), *b);
  for (std::size_t k = 0; k < t1.size(); ++k) {
    EXPECT_LT(std::abs(t2.a[k] - rot * t1.a[k]), 1e-12);
    EXPECT_NEAR(t2.r_norms.at(2.0)[k], t1.r_norms.at(2.0)[k], 1e-12);
    EXPECT_NEAR(t2.r_norms.at(3.2)[k], t1.r_norms.at(3.2)[k], 1e-12);
  }
}

TEST(Trace, InvariantsAlongRun) {
  const auto b = small_branch();
  const RadialField u0 = small_data(*b);
  const auto tr = analyze(run(u0, *b, 0.01, 5.0, 5), *b);
  EXPECT_NEAR(tr.u0_norm, lp_norm(u0, 2.0), 1e-15);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_LE(std::abs(tr.a[k]), tr.u0_norm + 1e-10);
    EXPECT_LT(tr.orth_residual[k], 1e-10 * tr.u0_norm);
  }
  EXPECT_TRUE(std::isnan(tr.ode_residual.front()));
  EXPECT_TRUE(std::isnan(tr.ode_residual.back()));
  EXPECT_THROW(tr.norm_trace(7.0, {1, 2}), InvalidArgument);
}

TEST(Trace, AsymptoticReportNeedsFrames) {
  const auto b = small_branch();
  const auto tr = analyze(run(b->nodes()[10].psi, *b, 0.01, 0.03, 1), *b);
  EXPECT_THROW(asymptotic_report(tr, *b), InsufficientData);
}

TEST(Trace, CsvColumns) {
  const auto b = small_branch();
  const auto tr = analyze(run(small_data(*b), *b, 0.01, 0.1, 2), *b);
  const auto path = std::filesystem::temp_directory_path() / "nlscm_trace.csv";
  write_trace_csv(path.string(), tr, 3.2, 3.2);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "t,re_a,im_a,abs_a,E,orth_residual,r_L2,r_Lp1,r_Lp2,ode_residual");
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  EXPECT_EQ(rows, tr.size());
  std::filesystem::remove(path);
}
