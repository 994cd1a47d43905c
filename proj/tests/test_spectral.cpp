#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "ahis/spectral.hpp"

using namespace ahis;

namespace {

constexpr double kPi = std::numbers::pi;

// Σ_{n≥1} e^{−t n²}, summed directly.
double theta_sum(double t) {
  double s = 0;
  for (int n = 1; n < 100000; ++n) {
    const double v = std::exp(-t * n * n);
    s += v;
    if (v < 1e-300) break;
  }
  return s;
}

}  // namespace

TEST(TorusModes, Multiplicities) {
  auto m0 = torus_modes(0, 5);
  ASSERT_EQ(m0.size(), 1u);
  EXPECT_EQ(m0[0].mu, 0.0);
  auto m1 = torus_modes(1, 3);
  ASSERT_EQ(m1.size(), 4u);
  EXPECT_EQ(m1[2].mu, 4.0);
  EXPECT_EQ(m1[2].multiplicity, 2);
  auto m2 = torus_modes(2, 1);
  // |m|² ∈ {0, 1, 2} with counts 1, 4, 4.
  ASSERT_EQ(m2.size(), 3u);
  EXPECT_EQ(m2[1].multiplicity, 4);
  EXPECT_EQ(m2[2].multiplicity, 4);
}

TEST(Discretize, DirichletInterval) {
  auto D = discretize_model(0, 0, kPi, {512, 0, 1.0});
  auto ev = mode_eigenvalues_extrapolated(D, 0, 3);
  for (int n = 1; n <= 3; ++n) EXPECT_NEAR(ev[n - 1], n * n, 1e-3 * n * n);
  EXPECT_THROW(discretize_model(0, 0, kPi, {32, 0, 1.0}), DomainError);
}

TEST(Discretize, BesselOracle) {
  auto D = discretize_model(2, 1, 1.0, {512, 1, 2.0});
  const double nu = std::sqrt(1.25);
  const double j = boost::math::cyl_bessel_j_zero(nu, 1);
  auto ev = mode_eigenvalues(D, 1, 1);
  EXPECT_NEAR(ev[0], j * j, 5e-3 * j * j);
  auto evr = mode_eigenvalues_extrapolated(D, 1, 1);
  EXPECT_NEAR(evr[0], j * j, 5e-4 * j * j);
}

TEST(Discretize, IrregularZeroModeIsDirichlet) {
  const double eps = 0.5;
  auto D = discretize_model(3, 1, eps, {512, 2, 2.0});
  auto ev = mode_eigenvalues_extrapolated(D, 0, 3);
  for (int n = 1; n <= 3; ++n) EXPECT_NEAR(ev[n - 1], std::pow(n * kPi / eps, 2), 1e-3 * std::pow(n * kPi / eps, 2));
  // Eigenvalues increase with |m|.
  double prev = 0;
  for (std::size_t m = 0; m < D.modes.size(); ++m) {
    const double l = mode_eigenvalues(D, m, 1)[0];
    EXPECT_GT(l, prev);
    prev = l;
  }
}

TEST(HeatTrace, ThetaOracle) {
  auto D = discretize_model(0, 0, kPi, {1024, 0, 1.0});
  auto h = heat_trace(D, {0.01}, RadialCutoff::one());
  EXPECT_NEAR(h.values[0], 8.36227, 1e-3);
  EXPECT_NEAR(h.values[0], theta_sum(0.01), 1e-3);
  EXPECT_NEAR(theta_sum(0.01), 0.5 * std::sqrt(kPi / 0.01) - 0.5, 1e-12);
}

TEST(HeatTrace, LargeTimeIsGroundState) {
  auto D = discretize_model(0, 0, kPi, {256, 0, 1.0});
  auto h = heat_trace(D, {100.0}, RadialCutoff::one(), false);
  const double l0 = mode_eigenvalues(D, 0, 1)[0];
  EXPECT_LE(h.values[0], std::exp(-100 * l0) * (1 + 1e-9));
  EXPECT_GT(h.values[0], 0.99 * std::exp(-100 * l0));
}

TEST(HeatTrace, BrieskornPositiveMonotone) {
  auto NB = remove_cross_term(induced_metric(surface_of_revolution(Rational(3, 2), 0.1)));
  auto op = model_operator(NB);
  auto D = discretize_model(op, {512, 32, 2.0});
  EXPECT_TRUE(D.includes_origin(0));
  EXPECT_FALSE(D.includes_origin(1));
  auto t = geometric_grid(1e-4, 1e-1, 12);
  auto h = heat_trace(D, t, RadialCutoff::bump(0.05, 0.09));
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_GT(h.values[i], 0.0);
    if (i > 0) {
      EXPECT_LT(h.values[i], h.values[i - 1]);
    }
  }
  EXPECT_LT(h.convergence, 2e-3);
  EXPECT_LT(h.tail_bound, 1e-10);
}

TEST(HeatTrace, ModeCutoffTooSmall) {
  auto D = discretize_model(2, 1, 1.0, {128, 2, 2.0});
  EXPECT_THROW(heat_trace(D, {1e-4}, RadialCutoff::one(), false), NumericalError);
}

TEST(HeatTrace, ConeDiskLimit) {
  // The flat cone with opening 2π/√2 has −Δ with p = r/√2, w = √2 r; mode 0
  // Dirichlet eigenvalues are j_{0,n}² · 2/ε²... checked through the
  // separation: −(p u′)′ = λ w u ⇔ −(r u′)′/r = 2λ u.
  auto N = remove_cross_term(induced_metric(surface_of_revolution(1, 1.0)));
  auto op = model_operator(N);
  auto D = discretize_model(op, {512, 4, 2.0});
  const double j0 = boost::math::cyl_bessel_j_zero(0.0, 1);
  auto ev = mode_eigenvalues_extrapolated(D, 0, 1);
  EXPECT_NEAR(ev[0], j0 * j0 / 2, 1e-3 * j0 * j0);
  // Mode m: −(r u′)′/r + 2m² u/r² = 2λ u, Bessel order √2·m.
  const double j1 = boost::math::cyl_bessel_j_zero(std::sqrt(2.0), 1);
  auto ev1 = mode_eigenvalues_extrapolated(D, 1, 1);
  EXPECT_NEAR(ev1[0], j1 * j1 / 2, 2e-3 * j1 * j1);
}

TEST(Area, WeightedAreaQuadrature) {
  auto p = model_profile(0, 1.0);
  EXPECT_NEAR(weighted_area(p, 0, RadialCutoff::one()), 1.0, 1e-12);
  RadialProfile disk;
  disk.w = [](double r) { return r; };
  disk.p = disk.w;
  disk.q = [](double r) { return 1 / r; };
  disk.epsilon = 1;
  EXPECT_NEAR(weighted_area(disk, 1, RadialCutoff::one()), kPi, 1e-12);
}
