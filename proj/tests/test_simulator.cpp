#include <cmath>

#include <gtest/gtest.h>

#include "rfnoise/analytic.hpp"
#include "rfnoise/simulator.hpp"

using namespace rfnoise;

namespace {

struct Draw {
  Matrix w, x;
  Vector y;
};

Draw small_draw(Index d, Index n, Index p, std::uint64_t seed) {
  RngStream rng(seed);
  Draw dr;
  dr.w = gaussian_matrix(p, d, 1.0 / std::sqrt(double(d)), rng);
  dr.x = gaussian_matrix(d, n, 1.0 / std::sqrt(double(d)), rng);
  dr.y = gaussian_vector(n, 1.0, rng);
  return dr;
}

// Ridge in the raw parameters, solved directly with a dense factorization.
Vector naive_ridge(const Matrix& f, const Vector& y, double lambda) {
  Matrix k = f * f.transpose();
  k.diagonal().array() += lambda;
  return k.ldlt().solve(f * y);
}

}  // namespace

TEST(RfRidge, PrimalAndDualAgreeWithDirectSolve) {
  for (Index p : {5, 40}) {
    const auto dr = small_draw(8, 20, p, 11 + p);
    const Vector beta = rf_ridge(dr.w, dr.x, dr.y, 0.3);
    EXPECT_LT((beta - naive_ridge(dr.w * dr.x, dr.y, 0.3)).norm(), 1e-9) << "p=" << p;
  }
  const auto dr = small_draw(4, 6, 3, 1);
  EXPECT_THROW(rf_ridge(dr.w, dr.x, dr.y, 0.0), DomainError);
  EXPECT_THROW(rf_ridge(dr.w, dr.x.leftCols(5), dr.y, 0.1), DomainError);
}

TEST(Operators, ReproduceTheFittedMap) {
  for (Index p : {5, 40}) {
    const auto dr = small_draw(8, 20, p, 21 + p);
    const auto ab = compute_AB(dr.w, dr.x, 0.7);
    const Vector g = dr.w.transpose() * rf_ridge(dr.w, dr.x, dr.y, 0.7);
    EXPECT_LT((ab.A * dr.y - g).norm(), 1e-10);
    EXPECT_LT((ab.B - ab.A * dr.x.transpose()).norm(), 1e-12);

    const auto ops = sim_detail::operators_from_gram(dr.w, dr.x, gram(dr.x), 0.7);
    EXPECT_LT((ops.B - ab.B).norm(), 1e-10);
    EXPECT_NEAR(ops.frob_a_sq, ab.A.squaredNorm(), 1e-10);
  }
}

TEST(MaskedFit, MatchesVectorizedRidge) {
  const Index d = 5, p = 4, q = 3;
  for (Index n : {3, 9}) {
    const auto dr = small_draw(d, n, p, 31 + n);
    RngStream rng(77);
    Matrix mask(q, p);
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < q; ++i) mask(i, j) = rng.bernoulli(0.6) ? 1.0 : 0.0;
    const Vector mu = gaussian_vector(q, 1.0, rng);
    const double lambda = 0.2;

    // Design over vec(V): column (i, k) holds mu_i M_ik F_k.
    const Matrix f = dr.w * dr.x;
    Matrix z(q * p, n);
    for (Index i = 0; i < q; ++i)
      for (Index k = 0; k < p; ++k) z.row(i * p + k) = mu(i) * mask(i, k) * f.row(k);
    const Vector v_ref = naive_ridge(z, dr.y, lambda);

    const Matrix v = masked_fit(dr.w, dr.x, dr.y, mask, mu, lambda);
    for (Index i = 0; i < q; ++i)
      for (Index k = 0; k < p; ++k) EXPECT_NEAR(v(i, k), v_ref(i * p + k), 1e-10) << "n=" << n;
  }
}

TEST(MaskedFit, FullMaskIsRescaledTwoLayerRidge) {
  const auto dr = small_draw(6, 15, 10, 41);
  RngStream rng(3);
  const Vector mu = gaussian_vector(7, 1.0, rng);
  const Matrix mask = Matrix::Ones(7, 10);
  const Matrix v = masked_fit(dr.w, dr.x, dr.y, mask, mu, 0.5);
  const Vector g = masked_effective_map(dr.w, v, mask, mu);
  const Vector ref = dr.w.transpose() * rf_ridge(dr.w, dr.x, dr.y, 0.5 / mu.squaredNorm());
  EXPECT_LT((g - ref).norm(), 1e-9);
}

TEST(MaskedFit, RejectsBadMasks) {
  const auto dr = small_draw(3, 4, 2, 5);
  Matrix mask = Matrix::Ones(2, 2);
  mask(0, 0) = 0.5;
  EXPECT_THROW(masked_fit(dr.w, dr.x, dr.y, mask, Vector::Ones(2), 0.1), DomainError);
}

TEST(MonteCarlo, SmallRunNearAnalytic) {
  const auto mc = mc_decomposition(McConfig::desk(0.1, 1.0, 1.0, 5, 4, 48, 32.0, 80));
  const auto an = decomposition(0.1, 1.0, 1.0);
  EXPECT_NEAR(mc.decomposition.bias_sq, an.bias_sq, 0.08);
  EXPECT_NEAR(mc.decomposition.var_clean, an.var_clean, 0.08);
  EXPECT_NEAR(mc.decomposition.var_noise, an.var_noise, 0.08);
  EXPECT_GT(mc.se_var_noise, 0.0);
  EXPECT_LT(mc.se_var_noise, 0.05);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  const auto a = mc_decomposition(McConfig::desk(0.1, 0.5, 0.5, 9, 1, 16, 8.0, 12));
  const auto b = mc_decomposition(McConfig::desk(0.1, 0.5, 0.5, 9, 6, 16, 8.0, 12));
  EXPECT_EQ(a.decomposition.bias_sq, b.decomposition.bias_sq);
  EXPECT_EQ(a.decomposition.var_clean, b.decomposition.var_clean);
  EXPECT_EQ(a.decomposition.var_noise, b.decomposition.var_noise);
  EXPECT_EQ(a.se_risk, b.se_risk);
}

TEST(MonteCarlo, SampledNoiseMatchesOperatorNorm) {
  const auto dr = small_draw(16, 128, 24, 51);
  const double lambda = 2.0, sigma_sq = 1.5;
  RngStream rng(8);
  const auto sampled = sampled_noise_variance(dr.w, dr.x, lambda, sigma_sq, 4000, rng);
  const double exact = sigma_sq * compute_AB(dr.w, dr.x, lambda).A.squaredNorm() / 16.0;
  EXPECT_NEAR(sampled.mean, exact, 4.0 * sampled.se + 1e-12);
}

TEST(MonteCarlo, ConfigValidation) {
  const auto g = ModelGeometry::from_ratios(8, 4.0, 1.0);
  EXPECT_THROW(McConfig(g, HyperParams(0.1, 0.0, 1.0, g), 1, 0), DomainError);
  EXPECT_THROW(McConfig(g, HyperParams(0.1, 0.0, 1.0, 5.0), 10, 0), DomainError);
  EXPECT_THROW(mc_decomposition(McConfig(g, HyperParams(0.0, 0.0, 1.0, g), 10, 0)), DomainError);
}

TEST(MaskedMonteCarlo, AlphaZeroIsTheNullPredictor) {
  const auto g = ModelGeometry::from_ratios(16, 8.0, 1.0, 64);
  const McConfig c(g, HyperParams(0.05, 0.64, 0.0, g), 40, 3, true, 2);
  const auto r = mc_masked_risk(c, 0.0);
  EXPECT_NEAR(r.decomposition.bias_sq, 1.0, 0.15);
  EXPECT_EQ(r.decomposition.var_noise, 0.0);
  EXPECT_NEAR(r.decomposition.risk, 1.0, 0.15);
}

TEST(MaskedMonteCarlo, DeterministicAcrossThreads) {
  const auto g = ModelGeometry::from_ratios(16, 8.0, 1.0, 64);
  const McConfig c1(g, HyperParams(0.05, 0.64, 0.5, g), 10, 4, true, 1);
  const McConfig c8(g, HyperParams(0.05, 0.64, 0.5, g), 10, 4, true, 8);
  const auto a = mc_masked_risk(c1, 0.5), b = mc_masked_risk(c8, 0.5);
  EXPECT_EQ(a.decomposition.risk, b.decomposition.risk);
  EXPECT_EQ(a.decomposition.bias_sq, b.decomposition.bias_sq);
  EXPECT_THROW(mc_masked_risk(McConfig::desk(0.1, 1.0, 0.0, 1, 1, 8, 4.0, 4), 0.5), DomainError);
}

TEST(OperatorGap, GapShrinksWithSampleRatio) {
  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    RngStream a = derive_trial_rng(17, s), b = derive_trial_rng(17, s);
    small += limit_operator_gap(ModelGeometry::from_ratios(32, 2.0, 2.0), 0.1, a);
    large += limit_operator_gap(ModelGeometry::from_ratios(32, 64.0, 2.0), 0.1, b);
  }
  EXPECT_GT(small, large);
  EXPECT_GT(large, 0.0);
}
