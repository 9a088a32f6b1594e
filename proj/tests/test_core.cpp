#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "rfnoise/core.hpp"
#include "rfnoise/csv.hpp"
#include "rfnoise/grid.hpp"
#include "rfnoise/linalg.hpp"
#include "rfnoise/parallel.hpp"

using namespace rfnoise;

TEST(Geometry, RatiosAndValidation) {
  const auto g = ModelGeometry::from_ratios(128, 64.0, 0.5, 512);
  EXPECT_EQ(g.n(), 8192);
  EXPECT_EQ(g.p(), 64);
  EXPECT_DOUBLE_EQ(g.gamma(), 0.5);
  EXPECT_DOUBLE_EQ(g.rho(), 64.0);
  EXPECT_DOUBLE_EQ(g.kappa(), 4.0);
  EXPECT_TRUE(std::isnan(ModelGeometry(4, 4, 4).kappa()));
  EXPECT_EQ(ModelGeometry::from_ratios(10, 1.0, 0.01).p(), 1);  // never below one feature
  EXPECT_THROW(ModelGeometry(0, 1, 1), DomainError);
  EXPECT_THROW(ModelGeometry(1, 0, 1), DomainError);
  EXPECT_THROW(ModelGeometry(1, 1, -1), DomainError);
}

TEST(HyperParams, ScalesWithRho) {
  const HyperParams h(0.1, 0.5, 1.0, 64.0);
  EXPECT_DOUBLE_EQ(h.lambda(), 6.4);
  EXPECT_DOUBLE_EQ(h.sigma_sq(), 32.0);
  EXPECT_THROW(HyperParams(-1.0, 0.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(HyperParams(0.1, -1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(HyperParams(0.1, 0.0, 1.5, 1.0), DomainError);
}

TEST(Decomposition, RiskIsTheSum) {
  const auto d = Decomposition::from_parts(0.25, 0.5, 0.125);
  EXPECT_DOUBLE_EQ(d.risk, 0.875);
}

TEST(Rng, TrialStreamsAreReproducibleAndDistinct) {
  auto a = derive_trial_rng(7, 3), b = derive_trial_rng(7, 3), c = derive_trial_rng(7, 4), e = derive_trial_rng(8, 3);
  const double va = a.normal();
  EXPECT_EQ(va, b.normal());
  EXPECT_NE(va, c.normal());
  EXPECT_NE(va, e.normal());
}

TEST(Rng, NormalMoments) {
  RngStream rng(99);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal(2.0);
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 4.0, 0.05);
}

TEST(Grid, LinearEndpointsExact) {
  const auto v = GridSpec{0.05, 4.0, 80, Spacing::linear}.values();
  ASSERT_EQ(v.size(), 80u);
  EXPECT_EQ(v.front(), 0.05);
  EXPECT_EQ(v.back(), 4.0);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]);
}

TEST(Grid, GeometricAndSingleStep) {
  const auto v = GridSpec{1.0, 100.0, 3, Spacing::geometric}.values();
  EXPECT_DOUBLE_EQ(v[1], 10.0);
  EXPECT_EQ(GridSpec({2.5, 9.0, 1, Spacing::linear}).values(), (std::vector<double>{2.5}));
}

TEST(Grid, Parse) {
  const auto g = parse_grid("0.05:4:80");
  EXPECT_EQ(g.start, 0.05);
  EXPECT_EQ(g.stop, 4.0);
  EXPECT_EQ(g.steps, 80);
  EXPECT_THROW(parse_grid("1:2"), std::invalid_argument);
  EXPECT_THROW(parse_grid("1:x:3"), std::invalid_argument);
  EXPECT_THROW(parse_grid("2:1:3"), std::invalid_argument);
  EXPECT_THROW(parse_grid("1:2:0"), std::invalid_argument);
  EXPECT_THROW(parse_grid("0:2:3", Spacing::geometric), std::invalid_argument);
}

TEST(Csv, RoundTripIncludingNan) {
  SweepRecord r;
  r.source = Source::estimator;
  r.lambda0 = 0.1;
  r.gamma = 1.0 / 3.0;
  r.sigma0_sq = 0.64;
  r.d = 128;
  r.n = 8192;
  r.p = 43;
  r.trials = 300;
  r.seed = 18446744073709551615ull;
  r.bias_sq = 0.072984;
  r.var_clean = 1e-300;
  r.var_noise = std::nan("");
  r.risk = std::numeric_limits<double>::infinity();
  const std::string line = serialize(r);
  EXPECT_NE(line.find(",nan,"), std::string::npos);
  EXPECT_TRUE(same_record(r, parse_record(line)));

  std::stringstream ss;
  write_csv(ss, {r, r});
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(same_record(back[1], r));
}

TEST(Csv, HeaderAndErrors) {
  std::stringstream ss;
  write_csv(ss, {});
  EXPECT_EQ(ss.str(), std::string(kCsvHeader) + "\n");
  std::stringstream bad("nope\n");
  EXPECT_THROW(read_csv(bad), std::invalid_argument);
  EXPECT_THROW(parse_record("mc,1,2"), std::invalid_argument);
  EXPECT_THROW(parse_source("paper"), std::invalid_argument);
}

TEST(Linalg, SpectralNormMatchesEigensolver) {
  RngStream rng(5);
  const Matrix a = gaussian_matrix(40, 3, 1.0, rng);
  const Matrix sym = a * a.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const double expected = es.eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_NEAR(spectral_norm_symmetric(sym, 1e-12).value, expected, 1e-8 * expected);
  EXPECT_EQ(spectral_norm_symmetric(Matrix::Zero(5, 5)).value, 0.0);
}

TEST(Linalg, GramIsXXt) {
  RngStream rng(6);
  const Matrix x = gaussian_matrix(7, 30, 1.0, rng);
  EXPECT_LT((gram(x) - x * x.transpose()).norm(), 1e-12);
}

TEST(Parallel, CoversEveryIndexAndPropagatesErrors) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
