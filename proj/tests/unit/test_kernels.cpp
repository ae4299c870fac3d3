#include "volvar/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace volvar;

namespace {

// Hand-derived profiles for rho = (1 - r^2)^4.
double rho4(double r) { return std::pow(1.0 - r * r, 4); }
double rho4_d1(double r) { return -8.0 * r * std::pow(1.0 - r * r, 3); }
double xi4(double r, int n) { return 8.0 * r * r * std::pow(1.0 - r * r, 3) / n; }

}  // namespace

TEST(Polynomial, EvaluateAndDifferentiate) {
  const Polynomial p({1.0, -2.0, 3.0});  // 1 - 2r + 3r^2
  EXPECT_DOUBLE_EQ(p(2.0), 9.0);
  EXPECT_DOUBLE_EQ(p.derivative()(2.0), 10.0);
  EXPECT_DOUBLE_EQ(p.times_r()(2.0), 18.0);
  EXPECT_DOUBLE_EQ((p + p.scaled(2.0))(1.0), 6.0);
  EXPECT_TRUE(Polynomial().is_zero());
}

TEST(Profile, BumpMatchesClosedForm) {
  const Profile rho = Profile::bump(4);
  for (double r : {0.0, 0.1, 0.37, 0.8, 0.999}) {
    EXPECT_NEAR(rho.value(r), rho4(r), 1e-15);
    EXPECT_NEAR(rho.d1(r), rho4_d1(r), 1e-14);
  }
  EXPECT_EQ(rho.value(1.0), 0.0);
  EXPECT_EQ(rho.value(1.5), 0.0);
  EXPECT_EQ(rho.d1(-0.1), 0.0);
}

TEST(Kernels, UnitBallVolume) {
  EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-15);
  EXPECT_NEAR(unit_ball_volume(2), M_PI, 1e-15);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * M_PI / 3.0, 1e-15);
}

TEST(Kernels, NormalizationConstantSymbolic) {
  // d omega_d int (1 - r^2)^4 r^(d-1) dr
  EXPECT_NEAR(normalization_constant(Profile::bump(4), 1), 256.0 / 315.0, 1e-12);
  EXPECT_NEAR(normalization_constant(Profile::bump(4), 2), 2.0 * M_PI / 10.0, 1e-12);
  EXPECT_NEAR(normalization_constant(Profile::bump(1), 3), 4.0 * M_PI * (1.0 / 3 - 1.0 / 5),
              1e-12);
}

TEST(Kernels, NaturalPairRelation) {
  for (int n : {2, 3}) {
    const Profile xi = natural_pair_from_rho(Profile::bump(4), n);
    for (int i = 0; i <= 1000; ++i) {
      const double r = i / 1000.0;
      EXPECT_NEAR(xi.value(r), r == 1.0 ? 0.0 : xi4(r, n), 1e-14);
      EXPECT_NEAR(-n * xi.value(r), r * Profile::bump(4).d1(r), 1e-12);
    }
  }
}

TEST(Kernels, NaturalPairRejectsIncreasingRho) {
  const Profile increasing(Polynomial({0.5, 0.0, 0.5}));
  EXPECT_THROW(natural_pair_from_rho(increasing, 2), InvalidArgument);
  EXPECT_THROW(natural_pair_from_rho(Profile::constant(1.0), 2), InvalidArgument);
}

TEST(Kernels, NormalizePairGivesUnitConstants) {
  const Profile rho = Profile::bump(4);
  const KernelPair raw(rho, natural_pair_from_rho(rho, 2), 2, 1);
  EXPECT_NEAR(raw.c_rho(), 256.0 / 315.0, 1e-12);
  EXPECT_NEAR(raw.c_xi(), 128.0 / 315.0, 1e-12);
  EXPECT_TRUE(raw.is_natural());
  EXPECT_LT(raw.natural_relation_error(1000), 1e-12);
  const KernelPair k = normalize_pair(raw);
  EXPECT_NEAR(k.c_rho(), 1.0, 1e-12);
  EXPECT_NEAR(k.c_xi(), 1.0, 1e-12);
  EXPECT_TRUE(k.is_natural());
}

TEST(Kernels, SupNormsMatchCalculus) {
  const KernelPair k = KernelPair::natural(2, 1);
  // |rho'| peaks at r = 1/sqrt(7); scaled by 1/C_rho = 315/256.
  const double r = 1.0 / std::sqrt(7.0);
  EXPECT_NEAR(k.rho_d1_sup(), -rho4_d1(r) * 315.0 / 256.0, 1e-10);
  EXPECT_DOUBLE_EQ(k.lip_xi(), k.xi_d1_sup());
  EXPECT_GT(k.rho_d2_sup(), 0.0);
}

TEST(Kernels, BetaIsMinimumOnInterval) {
  const KernelPair k = KernelPair::natural(2, 1);
  const double c0 = 2.1;
  const double lo = std::pow(c0, -2.0) / 4.0;
  // xi rises on [0, 1/2], so the minimum sits at the left end.
  EXPECT_NEAR(k.beta(c0), xi4(lo, 2) * 315.0 / 128.0, 1e-12);
}

TEST(Kernels, RejectsBadPairs) {
  const Profile rho = Profile::bump(4);
  // rho'(0) != 0
  const Profile tilted(Polynomial({1.0, -1.0}));
  EXPECT_THROW(KernelPair(tilted, rho, 2, 1), InvalidArgument);
  EXPECT_THROW(KernelPair(rho, rho, 1, 2), DimensionMismatch);
  EXPECT_THROW(KernelPair::from_name("gaussian", 2, 1, 4), InvalidArgument);
}

TEST(Kernels, IndependentPairIsNotNatural) {
  const KernelPair k = KernelPair::independent(2, 1, 4);
  EXPECT_FALSE(k.is_natural());
  EXPECT_NEAR(k.c_rho(), 1.0, 1e-12);
}

TEST(Kernels, ScaledKernels) {
  const KernelPair k = KernelPair::natural(2, 1);
  EXPECT_NEAR(k.rho_eps(0.05, 0.1), std::pow(0.1, -2) * k.rho().value(0.5), 1e-12);
  EXPECT_EQ(k.xi_eps(0.2, 0.1), 0.0);
}

TEST(Kernels, SampledSupFindsInteriorMaximum) {
  EXPECT_NEAR(sampled_sup([](double r) { return std::sin(M_PI * r); }), 1.0, 1e-14);
}
