#include <gtest/gtest.h>

#include "support.hpp"

using namespace nlscm;
using nlscm::test::small_branch;

namespace {

RadialField data(const SpectralData& sd, std::uint64_t seed = 3) {
  ProbeDataGenerator gen(seed, 2.5, 8.0);
  return gen.next(sd);
}

double dist(const RadialField& a, const RadialField& b) { return lp_norm(a - b, 2.0); }

ProbeSettings settings(double T) {
  ProbeSettings s;
  s.dt = 0.02;
  s.T = T;
  s.frame_stride = 5;
  s.absorber = {30.0, 5.0, 2};
  s.data_width = 2.5;
  s.seed = 11;
  s.samples = 2;
  s.fit_window = {0.2, 2.0};
  return s;
}

}  // namespace

TEST(LinearizationPath, FrozenOrbitAmplitude) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const double E = eval_manifold(*b, 0.3).E;
  for (double t : {0.0, 1.0, 7.5}) EXPECT_LT(std::abs(p.amplitude(t) - std::polar(0.3, -E * t)), 1e-15);
  EXPECT_THROW(LinearizationPath::frozen(b, 0.9), OutOfRange);
  EXPECT_THROW(LinearizationPath::frozen(b, -0.1), OutOfRange);
}

TEST(Omega, ZeroAmplitudePathIsTheLinearFlow) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.0);
  const RadialField v = data(b->spectrum());
  const RadialField lin = propagate_linear(b->spectrum(), v, 0.01, 200);
  EXPECT_LT(dist(omega_apply(p, 0.0, 2.0, v, 0.01), lin), 1e-14);
  EXPECT_LT(lp_norm(t_operator_apply(p, 0.0, 2.0, v, 0.01), 2.0), 1e-14);
  EXPECT_LT(lp_norm(t_tilde_apply(b->spectrum(), p, 0.0, 2.0, v, 0.01), 2.0), 1e-14);
}

TEST(Omega, ProjectsDataOntoContinuousSubspace) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.0);
  const RadialField v = data(b->spectrum());
  const RadialField with_bound = v + b->spectrum().psi0;
  EXPECT_LT(dist(omega_apply(p, 0.0, 0.0, with_bound, 0.01), v), 1e-13);
}

TEST(Omega, EqualTimesGiveIdentityAndZeroCorrections) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const RadialField v = data(b->spectrum());
  EXPECT_LT(dist(omega_apply(p, 1.5, 1.5, v, 0.01), v), 1e-15);
  EXPECT_EQ(lp_norm(t_operator_apply(p, 1.5, 1.5, v, 0.01), 2.0), 0.0);
  EXPECT_EQ(lp_norm(t_tilde_apply(b->spectrum(), p, 1.5, 1.5, v, 0.01), 2.0), 0.0);
}

TEST(Omega, CocycleOnTheStepGrid) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const RadialField v = data(b->spectrum());
  const RadialField direct = omega_apply(p, 0.0, 2.0, v, 0.01);
  const RadialField split = omega_apply(p, 0.75, 2.0, omega_apply(p, 0.0, 0.75, v, 0.01), 0.01);
  EXPECT_LT(dist(direct, split), 1e-10 * lp_norm(v, 2.0));
}

// Smooth even data: odd powers of r are not smooth at the origin and cap the order.
TEST(Omega, SecondOrderInTheStep) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const RadialField v = project_continuous(b->spectrum(), test::gaussian(b->grid(), 2.5, cplx(1.0, 0.5)));
  const RadialField ref = omega_apply(p, 0.0, 1.0, v, 0.00125);
  const double e1 = dist(omega_apply(p, 0.0, 1.0, v, 0.01), ref);
  const double e2 = dist(omega_apply(p, 0.0, 1.0, v, 0.005), ref);
  EXPECT_NEAR(e1 / e2, 4.0 * (1 - 1.0 / 64) / (1 - 1.0 / 16), 0.6);
}

TEST(Omega, StaysInRangeOfProjection) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const RadialField v = data(b->spectrum());
  const RadialField z = omega_apply(p, 0.0, 5.0, v, 0.01);
  EXPECT_LT(std::abs(inner_product(b->spectrum().psi0, z)), 1e-6 * lp_norm(v, 2.0));
}

TEST(Omega, L2BoundStableUnderDoubling) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const RadialField v = data(b->spectrum());
  double first = 0, second = 0;
  RadialField z = v;
  for (int k = 1; k <= 20; ++k) {
    z = omega_apply(p, (k - 1) * 0.5, k * 0.5, z, 0.01);
    (k <= 10 ? first : second) = std::max(k <= 10 ? first : second, lp_norm(z, 2.0) / lp_norm(v, 2.0));
  }
  EXPECT_LT(std::max(first, second) / first, 1.05);
}

TEST(TOperator, GrowsWithAmplitude) {
  const auto b = small_branch();
  const RadialField v = data(b->spectrum());
  double prev = 0;
  for (double a0 : {0.05, 0.15, 0.3, 0.45}) {
    const double t = lp_norm(t_operator_apply(LinearizationPath::frozen(b, a0), 0.0, 1.0, v, 0.01), 2.0);
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(TTilde, ComplexLinearAndTruncatedAfterUnitTime) {
  const auto b = small_branch();
  const auto& sd = b->spectrum();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const RadialField v = data(sd), w = data(sd, 9);
  const cplx c(0.3, -1.7);
  const RadialField lhs = t_tilde_apply(sd, p, 0.0, 1.5, c * v + w, 0.01);
  const RadialField rhs = c * t_tilde_apply(sd, p, 0.0, 1.5, v, 0.01) + t_tilde_apply(sd, p, 0.0, 1.5, w, 0.01);
  EXPECT_LT(dist(lhs, rhs), 1e-13 * lp_norm(rhs, 2.0));
  const RadialField later = propagate_linear(sd, t_tilde_apply(sd, p, 0.0, 1.0, v, 0.01), 0.01, 50);
  EXPECT_LT(dist(t_tilde_apply(sd, p, 0.0, 1.5, v, 0.01), later), 1e-13);
  EXPECT_THROW(t_tilde_apply(sd, p, 1.0, 0.5, v, 0.01), InvalidArgument);
}

TEST(Propagator, StepMustDivideTheInterval) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const RadialField v = data(b->spectrum());
  EXPECT_THROW(omega_apply(p, 0.0, 1.005, v, 0.01), InvalidArgument);
  EXPECT_THROW(omega_apply(p, 0.0, 1.0, v, 0.0), InvalidArgument);
}

TEST(ShadowingPath, BoundStateTraceMatchesFrozenOrbit) {
  const auto b = small_branch();
  const auto& node = b->nodes()[128];
  EvolutionConfig c;
  c.dt = 0.01;
  c.T = 3.0;
  c.frame_stride = 1;
  c.absorber = {30.0, 5.0, 2};
  ModulationAnalyzer an(*b, {3.2}, 30.0);
  evolve(node.psi, b->spectrum().hamiltonian, b->nonlinearity(), c, [&](const TrajectoryFrame& f) { an.consume(f); });
  const auto tr = an.take();
  const auto shadow = LinearizationPath::shadowing(b, tr);
  const auto frozen = LinearizationPath::frozen(b, node.a);
  for (double t : {0.5, 1.234, 2.9}) EXPECT_LT(std::abs(shadow.amplitude(t) - frozen.amplitude(t)), 1e-5);
  const RadialField v = data(b->spectrum());
  EXPECT_LT(dist(omega_apply(shadow, 0.0, 2.0, v, 0.01), omega_apply(frozen, 0.0, 2.0, v, 0.01)), 1e-5);
  EXPECT_THROW(omega_apply(shadow, 0.0, 3.5, v, 0.01), WindowViolation);
  EXPECT_EQ(shadow.start(), 0.0);
}

TEST(ProbeDecay, ZeroAmplitudePathReproducesLinearProbe) {
  const auto b = small_branch();
  const auto& sd = b->spectrum();
  const auto p = LinearizationPath::frozen(b, 0.0);
  const ProbeSettings s = settings(2.0);
  const std::vector<ProbePair> pairs = {
      {ProbePair::Operator::omega, NormSpace::weighted(2.5), NormSpace::weighted(-2.5)},
      {ProbePair::Operator::t_operator, NormSpace::lebesgue(2.0), NormSpace::weighted(-2.5)}};
  const auto res = probe_decay(p, 0.0, pairs, s);
  const auto lin = probe_linear_decay(sd, 2.5, 3.2, s);
  ASSERT_EQ(res.traces[0].times, lin.weighted.times);
  for (std::size_t k = 0; k < lin.weighted.values.size(); ++k) {
    EXPECT_NEAR(res.traces[0].values[k], lin.weighted.values[k], 1e-13);
    EXPECT_EQ(res.traces[1].values[k], 0.0);
  }
  EXPECT_LT(res.max_range_drift, 1e-12);
  EXPECT_EQ(res.traces[0].label, "Omega L2_w2.5->L2_w-2.5");
}

TEST(ProbeDecay, RefinementNeverLowersTheEnvelope) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const std::vector<ProbePair> pairs = {{ProbePair::Operator::omega, NormSpace::weighted(2.5), NormSpace::weighted(-2.5)}};
  const auto plain = probe_decay(p, 0.0, pairs, settings(2.0));
  const auto refined = probe_decay(p, 0.0, pairs, settings(2.0), 3);
  for (std::size_t k = 0; k < plain.traces[0].values.size(); ++k)
    EXPECT_GE(refined.traces[0].values[k], plain.traces[0].values[k]);
}

TEST(ProbeDecay, RejectsWindowBeyondAbsorber) {
  const auto b = small_branch();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const std::vector<ProbePair> pairs = {{ProbePair::Operator::omega, NormSpace::lebesgue(2.0), NormSpace::lebesgue(2.0)}};
  ProbeSettings s = settings(2.0);
  s.T = 2 * s.reliable_time();
  EXPECT_THROW(probe_decay(p, 0.0, pairs, s), WindowViolation);
  const std::vector<ProbePair> bad = {{ProbePair::Operator::omega, NormSpace::lebesgue(0.5), NormSpace::lebesgue(2.0)}};
  EXPECT_THROW(probe_decay(p, 0.0, bad, settings(2.0)), InvalidArgument);
}

TEST(ProbeShortTime, MatchesDirectOperator) {
  const auto b = small_branch();
  const auto& sd = b->spectrum();
  const auto p = LinearizationPath::frozen(b, 0.3);
  ProbeSettings s = settings(2.0);
  s.samples = 1;
  const ProbePair pair{ProbePair::Operator::t_operator, NormSpace::lebesgue(2.0), NormSpace::weighted(-2.5)};
  const auto tr = probe_short_time(p, 0.0, pair, {0.04, 0.08, 0.16}, s);
  ProbeDataGenerator gen(s.seed, s.data_width, s.data_support());
  const RadialField v = gen.next(sd);
  for (std::size_t q = 0; q < 3; ++q) {
    const double direct = weighted_l2_norm(t_operator_apply(p, 0.0, tr.times[q], v, s.dt), -2.5) / lp_norm(v, 2.0);
    EXPECT_NEAR(tr.values[q], direct, 1e-12 * direct);
  }
}

TEST(ProbeShortTimeScan, SupremumOverWidths) {
  const auto b = small_branch();
  const auto& sd = b->spectrum();
  const auto p = LinearizationPath::frozen(b, 0.3);
  const ProbePair pair{ProbePair::Operator::t_operator, NormSpace::lebesgue(1.2), NormSpace::lebesgue(6.0)};
  const std::vector<double> taus{0.02, 0.04}, widths{0.3, 1.0, 2.5};
  const auto tr = probe_short_time_scan(p, 0.0, pair, taus, widths, 0.01);
  for (std::size_t q = 0; q < taus.size(); ++q) {
    double best = 0;
    for (double w : widths) {
      const RadialField v = project_continuous(sd, test::gaussian(b->grid(), w));
      best = std::max(best, lp_norm(t_operator_apply(p, 0.0, taus[q], v, 0.01), 6.0) / lp_norm(v, 1.2));
    }
    EXPECT_NEAR(tr.values[q], best, 1e-12 * best);
  }
  EXPECT_THROW(probe_short_time_scan(p, 0.0, pair, taus, {0.05}, 0.01), InvalidArgument);
  const auto zero = probe_short_time_scan(LinearizationPath::frozen(b, 0.0), 0.0, pair, taus, widths, 0.01);
  for (double v : zero.values) EXPECT_EQ(v, 0.0);
}
