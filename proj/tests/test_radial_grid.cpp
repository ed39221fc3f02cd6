#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "support.hpp"

using namespace nlscm;
using nlscm::test::gaussian;
using nlscm::test::random_field;

TEST(GridSpec, RejectsInvalidParameters) {
  EXPECT_THROW(GridSpec(3, 10.0, 100), ConfigError);
  EXPECT_THROW(GridSpec(4, 10.0, 1), ConfigError);
  EXPECT_THROW(GridSpec(4, -1.0, 100), ConfigError);
  try {
    GridSpec(6, 10.0, 100);
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "grid.dimension");
  }
}

TEST(GridSpec, CellCenteredNodes) {
  const GridSpec g(4, 10.0, 8);
  EXPECT_DOUBLE_EQ(g.spacing(), 1.25);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_DOUBLE_EQ(g.node(j), (j + 0.5) * 1.25);
}

TEST(GridSpec, SphereAreaClosedForm) {
  EXPECT_NEAR(sphere_area(4), 2 * std::numbers::pi * std::numbers::pi, 1e-13);
  EXPECT_NEAR(sphere_area(5), 8 * std::numbers::pi * std::numbers::pi / 3, 1e-13);
}

TEST(LpNorm, ZeroField) {
  const GridSpec g(5, 10.0, 64);
  const RadialField f(g);
  for (double p : {1.0, 2.0, 3.7, kInf}) EXPECT_EQ(lp_norm(f, p), 0.0);
}

TEST(LpNorm, UnitBallIndicatorInFourDimensions) {
  for (long m : {200, 2000}) {
    const GridSpec g(4, 2.0, m);
    const auto f = RadialField::from_function(g, [](double r) { return r < 1.0 ? 1.0 : 0.0; });
    EXPECT_NEAR(lp_norm(f, 2.0), std::numbers::pi / std::sqrt(2.0), g.spacing());
  }
}

TEST(LpNorm, Homogeneity) {
  const GridSpec g(4, 20.0, 300);
  const auto f = random_field(g, 1);
  const cplx c(3, 4);
  for (double p : {1.0, 2.0, 3.2, kInf}) EXPECT_NEAR(lp_norm(c * f, p), 5.0 * lp_norm(f, p), 1e-12 * lp_norm(f, p));
}

TEST(LpNorm, RejectsExponentBelowOne) {
  const GridSpec g(4, 1.0, 10);
  EXPECT_THROW(lp_norm(RadialField(g), 0.5), InvalidArgument);
}

TEST(LpNorm, GaussianQuadratureConverges) {
  // ||e^{-r^2}||_2^2 over R^N is (pi/2)^{N/2}.
  for (int n : {4, 5}) {
    const double exact = std::pow(std::numbers::pi / 2, n / 4.0);
    double prev = 0;
    for (long m : {50, 100, 200, 400}) {
      const GridSpec g(n, 10.0, m);
      const double err = std::abs(lp_norm(gaussian(g, 1.0), 2.0) - exact);
      if (prev > 0) EXPECT_GE(prev / err, 1.9) << "M=" << m;
      prev = err;
    }
  }
}

TEST(WeightedNorm, UnitWeightAndMonotone) {
  const GridSpec g(4, 20.0, 256);
  const auto f = random_field(g, 2);
  EXPECT_NEAR(weighted_l2_norm(f, 0.0), lp_norm(f, 2.0), 1e-13 * lp_norm(f, 2.0));
  EXPECT_EQ(weighted_l2_norm(RadialField(g), 1.5), 0.0);
  EXPECT_GE(weighted_l2_norm(f, 1.5), lp_norm(f, 2.0));
  EXPECT_LE(weighted_l2_norm(f, -1.5), lp_norm(f, 2.0));
}

TEST(InnerProduct, Sesquilinear) {
  const GridSpec g(5, 15.0, 300);
  const auto f = random_field(g, 3), h = random_field(g, 4);
  const cplx ff = inner_product(f, f);
  EXPECT_NEAR(ff.imag(), 0.0, 1e-14 * ff.real());
  EXPECT_GE(ff.real(), 0.0);
  EXPECT_NEAR(ff.real(), std::pow(lp_norm(f, 2.0), 2), 1e-12 * ff.real());
  const cplx fi = inner_product(f, cplx(0, 1) * f);
  EXPECT_NEAR(fi.real(), 0.0, 1e-12 * ff.real());
  EXPECT_NEAR(fi.imag(), ff.real(), 1e-12 * ff.real());
  const cplx a = inner_product(f, h), b = inner_product(h, f);
  EXPECT_NEAR(std::abs(a - std::conj(b)), 0.0, 1e-12 * std::abs(a));
}

TEST(InnerProduct, GridMismatch) {
  EXPECT_THROW(inner_product(RadialField(GridSpec(4, 10, 10)), RadialField(GridSpec(4, 10, 11))), IncompatibleGrid);
  EXPECT_THROW(inner_product(RadialField(GridSpec(4, 10, 10)), RadialField(GridSpec(5, 10, 10))), IncompatibleGrid);
}

TEST(Laplacian, ConstantsAreHarmonicInInterior) {
  const GridSpec g(4, 10.0, 100);
  const RadialField lap = apply_laplacian(RadialField::from_function(g, [](double) { return 3.0; }));
  for (std::size_t j = 0; j + 1 < g.size(); ++j) EXPECT_NEAR(std::abs(lap[j]), 0.0, 1e-10);
}

TEST(Laplacian, QuadraticGivesTwoN) {
  for (int n : {4, 5}) {
    double prev = 0;
    for (long m : {100, 200, 400}) {
      const GridSpec g(n, 5.0, m);
      const RadialField lap = apply_laplacian(RadialField::from_function(g, [](double r) { return r * r; }));
      double err = 0;
      for (std::size_t j = 0; j + 1 < g.size(); ++j) err = std::max(err, std::abs(lap[j] - cplx(2.0 * n)));
      EXPECT_LT(err, 10 * g.spacing() * g.spacing() + 1e-9);
      if (prev > 1e-9) EXPECT_GE(prev / err, 3.5);
      prev = err;
    }
  }
}

TEST(Laplacian, SelfAdjointOnInteriorFields) {
  for (int n : {4, 5}) {
    const GridSpec g(n, 30.0, 2000);
    const auto f = random_field(g, 5, 20.0), h = random_field(g, 6, 20.0);
    const cplx lhs = inner_product(f, apply_laplacian(h)), rhs = inner_product(apply_laplacian(f), h);
    EXPECT_LT(std::abs(lhs - rhs), 1e-10 * lp_norm(f, 2.0) * lp_norm(h, 2.0) * (1 + std::abs(lhs)));
  }
}

TEST(Laplacian, SelfAdjointIncludingBoundaryCells) {
  const GridSpec g(4, 5.0, 500);
  const auto f = random_field(g, 7), h = random_field(g, 8);
  const cplx lhs = inner_product(f, apply_laplacian(h)), rhs = inner_product(apply_laplacian(f), h);
  EXPECT_LT(std::abs(lhs - rhs), 1e-12 * std::abs(lhs));
}

TEST(Laplacian, NegativeSemidefinite) {
  const GridSpec g(5, 10.0, 400);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = random_field(g, 100 + s);
    EXPECT_LE(inner_product(f, apply_laplacian(f)).real(), 0.0);
  }
}

TEST(FieldIo, BinaryRoundTripIsBitExact) {
  const GridSpec g(5, 12.5, 333);
  const auto f = random_field(g, 9);
  std::stringstream ss;
  write_binary(ss, f);
  const RadialField back = read_binary(ss);
  ASSERT_TRUE(back.grid() == g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_EQ(back[j].real(), f[j].real());
    EXPECT_EQ(back[j].imag(), f[j].imag());
  }
}

TEST(FieldIo, CsvRoundTrip) {
  const GridSpec g(4, 7.0, 50);
  const auto f = random_field(g, 10);
  std::stringstream ss;
  write_csv(ss, f);
  const RadialField back = read_csv(ss);
  ASSERT_TRUE(back.grid() == g);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(back[j], f[j]);
}

TEST(FieldIo, RejectsForeignBytes) {
  std::stringstream ss("definitely not a field");
  EXPECT_THROW(read_binary(ss), FormatError);
}

TEST(Tridiagonal, SolveInvertsMultiply) {
  const std::size_t n = 50;
  Tridiagonal<cplx> a(n);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t j = 0; j < n; ++j) {
    a.lower[j] = {u(rng), u(rng)};
    a.upper[j] = {u(rng), u(rng)};
    a.diag[j] = {4 + u(rng), u(rng)};
  }
  std::vector<cplx> x(n), y(n);
  for (auto& z : x) z = {u(rng), u(rng)};
  a.multiply<cplx>(x, y);
  TridiagonalSolver<cplx>(a).solve_in_place<cplx>(y);
  for (std::size_t j = 0; j < n; ++j) EXPECT_LT(std::abs(y[j] - x[j]), 1e-13);
}

TEST(Tridiagonal, SturmEigenvaluesMatchClosedForm) {
  // tridiag(-1, 2, -1) of size n: 2 - 2 cos(k pi/(n+1)).
  const std::size_t n = 40;
  SymTridiagonal s;
  s.diag.assign(n, 2.0);
  s.off.assign(n - 1, -1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double exact = 2 - 2 * std::cos((k + 1) * std::numbers::pi / (n + 1));
    EXPECT_NEAR(s.eigenvalue(k), exact, 1e-12);
  }
  EXPECT_EQ(s.count_below(2.0), n / 2);
}
