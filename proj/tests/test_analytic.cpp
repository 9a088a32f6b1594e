#include <cmath>

#include <gtest/gtest.h>

#include "rfnoise/analytic.hpp"

using namespace rfnoise;

namespace {
const double kLambdas[] = {0.0, 1e-3, 0.05, 0.1, 1.0, 10.0};
const double kGammas[] = {0.05, 0.25, 0.5, 0.9, 1.0, 1.1, 2.0, 4.0, 10.0};
}  // namespace

TEST(Analytic, ReferenceValues) {
  EXPECT_NEAR(variance_noise(0.1, 1.0, 1.0), 0.615861, 5e-7);
  EXPECT_NEAR(bias_squared(0.1, 1.0), 0.072984, 5e-7);
  const Phi f = phi(0.1, 1.0);
  EXPECT_DOUBLE_EQ(f.phi1, 0.2);
  EXPECT_NEAR(f.phi2, std::sqrt(1.21 - 1.8 + 1.0), 1e-15);
}

TEST(Analytic, NoiseScalesLinearly) {
  EXPECT_EQ(variance_noise(0.3, 0.7, 0.0), 0.0);
  EXPECT_NEAR(variance_noise(0.3, 0.7, 2.5), 2.5 * variance_noise_unit(0.3, 0.7), 1e-15);
}

TEST(Analytic, CorrectedIsFrobeniusMinusSquaredMean) {
  // Var_clean = (1/d) E||B~||^2 - (1 - Phi3/2)^2, and (1/d) E||B~||^2 is the unit noise variance.
  for (double l : kLambdas)
    for (double g : kGammas) {
      const double mean_diag = 1.0 - 0.5 * phi(l, g).phi3;
      EXPECT_NEAR(variance_clean(l, g), variance_noise_unit(l, g) - mean_diag * mean_diag, 1e-12)
          << "l=" << l << " g=" << g;
    }
}

TEST(Analytic, CorrectedIsNonNegativeAndContinuousAtOne) {
  for (double l : kLambdas)
    for (double g : kGammas) EXPECT_GE(variance_clean(l, g), -1e-14) << "l=" << l << " g=" << g;
  for (double l : {0.05, 1.0}) EXPECT_NEAR(variance_clean(l, 1.0 - 1e-9), variance_clean(l, 1.0 + 1e-9), 1e-7);
}

TEST(Analytic, RidgelessClosedForms) {
  for (double g : {0.1, 0.25, 0.5, 0.9}) {
    EXPECT_NEAR(variance_clean(0.0, g), g * (1.0 - g), 1e-12);
    EXPECT_NEAR(variance_noise(0.0, g, 1.0), g, 1e-12);
    EXPECT_NEAR(bias_squared(0.0, g), (1.0 - g) * (1.0 - g), 1e-12);
  }
  for (double g : {2.0, 4.0}) {
    EXPECT_NEAR(variance_noise(0.0, g, 1.0), 1.0, 1e-12);
    EXPECT_NEAR(bias_squared(0.0, g), 0.0, 1e-12);
    EXPECT_NEAR(variance_clean(0.0, g), 0.0, 1e-12);
  }
  // Single zero of Phi2, filled by continuity.
  EXPECT_EQ(variance_noise(0.0, 1.0, 1.0), 1.0);
  EXPECT_EQ(variance_clean(0.0, 1.0), 0.0);
}

TEST(Analytic, LiteralAndGammaScaledForms) {
  EXPECT_NEAR(variance_clean(0.0, 0.25, CleanVarianceForm::literal), -0.9375, 1e-12);
  for (double g : {0.1, 0.5, 2.0, 3.0})
    EXPECT_NEAR(variance_clean(0.0, g, CleanVarianceForm::gamma_scaled), variance_clean(0.0, g), 1e-12);
  for (double l : {0.1, 1.0})
    EXPECT_NEAR(variance_clean(l, 1.0, CleanVarianceForm::gamma_scaled), variance_clean(l, 1.0), 1e-12);
  // Away from lambda0 = 0 and gamma = 1 the gamma-scaled reading differs.
  EXPECT_GT(std::abs(variance_clean(1.0, 0.3, CleanVarianceForm::gamma_scaled) - variance_clean(1.0, 0.3)), 0.1);
}

TEST(Analytic, Monotonicity) {
  for (double l : {0.05, 0.1, 1.0}) {
    double prev_noise = -1.0, prev_bias = 2.0;
    for (int i = 1; i <= 200; ++i) {
      const double g = 0.05 * i;
      const double vn = variance_noise_unit(l, g), b = bias_squared(l, g);
      EXPECT_GE(vn, prev_noise);
      EXPECT_LE(b, prev_bias);
      prev_noise = vn;
      prev_bias = b;
    }
  }
}

TEST(Analytic, PrunedAndVariantSubstitution) {
  const auto base = decomposition(0.05 / 0.25, 1.5, 0.64);
  const auto pruned = pruned_decomposition(0.05, 1.5, 0.25, 0.64);
  EXPECT_EQ(pruned.risk, base.risk);
  const auto one = pruned_decomposition(0.05, 1.5, 1.0, 0.64);
  EXPECT_EQ(one.risk, decomposition(0.05, 1.5, 0.64).risk);
  const auto variant = variant_decomposition(0.05, 1.5, 2.0, 0.5, 0.64);
  EXPECT_EQ(variant.var_noise, decomposition(0.05, 1.5, 0.64).var_noise);
  const auto null = null_predictor_decomposition();
  EXPECT_EQ(null.risk, 1.0);
  EXPECT_EQ(null.bias_sq, 1.0);
}

TEST(Analytic, LargeRidgeTendsToNullPredictor) {
  const auto d = decomposition(1e8, 1.0, 1.0);
  EXPECT_NEAR(d.bias_sq, 1.0, 1e-6);
  EXPECT_NEAR(d.var_noise, 0.0, 1e-6);
}

TEST(Analytic, DomainErrors) {
  EXPECT_THROW(phi(-0.1, 1.0), DomainError);
  EXPECT_THROW(phi(0.1, -1.0), DomainError);
  EXPECT_THROW(variance_clean(0.1, 0.0), DomainError);
  EXPECT_THROW(variance_noise(0.1, 1.0, -1.0), DomainError);
  EXPECT_THROW(pruned_decomposition(0.1, 1.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(variant_decomposition(0.1, 1.0, 0.0, 0.5, 1.0), DomainError);
  EXPECT_THROW(parse_clean_form("exact"), DomainError);
  EXPECT_EQ(parse_clean_form("gamma-scaled"), CleanVarianceForm::gamma_scaled);
}
