#pragma once

// Finite-size Monte Carlo of the random-feature models.
//
// Two-layer model: f(x) = (W x)^T beta with W ~ N(0, 1/d) fixed and beta fit by
// ridge regression on (X, y), y = X^T theta + eps. Masked three-layer model:
// f(x) = ((V o M) W x)^T mu with M ~ Bernoulli(alpha), mu ~ N(0, 1/q) (or
// N(0, 1/d) in the variant), V fit by ridge regression.
//
// For a fixed draw of (X, W) the prediction error is linear in (theta, eps):
//   g - theta = (B - I) theta + A eps,   A = W^T (F F^T + lambda I)^-1 F,  B = A X^T,
// so the theta and eps expectations are taken in closed form and only (X, W)
// (plus M, mu for the masked model) are sampled.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <vector>

#include "rfnoise/core.hpp"
#include "rfnoise/linalg.hpp"
#include "rfnoise/parallel.hpp"

namespace rfnoise {

struct SyntheticDataset {
  Matrix X;      // d x n, columns are examples
  Vector theta;  // d
  Vector eps;    // n
  Vector y;      // n
};

/// X ~ N(0, I/d) columns, theta ~ N(0, I), eps ~ N(0, sigma_sq), y = X^T theta + eps.
inline SyntheticDataset gen_dataset(const ModelGeometry& g, double sigma_sq, RngStream& rng) {
  if (!(sigma_sq >= 0.0)) throw DomainError("sigma_sq must be >= 0");
  const double sd_x = 1.0 / std::sqrt(static_cast<double>(g.d()));
  SyntheticDataset ds;
  ds.X = gaussian_matrix(g.d(), g.n(), sd_x, rng);
  ds.theta = gaussian_vector(g.d(), 1.0, rng);
  ds.eps = gaussian_vector(g.n(), std::sqrt(sigma_sq), rng);
  ds.y = ds.X.transpose() * ds.theta + ds.eps;
  return ds;
}

inline Matrix draw_first_layer(const ModelGeometry& g, RngStream& rng) {
  return gaussian_matrix(g.p(), g.d(), 1.0 / std::sqrt(static_cast<double>(g.d())), rng);
}

// ---------------------------------------------------------------------------
// Ridge fits

/// beta = (F F^T + lambda I)^-1 F y with F = W X. Factors the p x p Gram
/// matrix when p <= n and the n x n dual otherwise.
inline Vector rf_ridge(const Matrix& w, const Matrix& x, const Vector& y, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("rf_ridge requires lambda > 0");
  if (w.cols() != x.rows() || x.cols() != y.size()) throw DomainError("rf_ridge: shape mismatch");
  const Matrix f = w * x;
  const Vector fy = f * y;
  Vector beta;
  if (f.rows() <= f.cols()) {
    Matrix k = gram(f);
    k.diagonal().array() += lambda;
    beta = spd_factor(k).solve(fy);
  } else {
    Matrix k = f.transpose() * f;
    k.diagonal().array() += lambda;
    beta = f * spd_factor(k).solve(y);
  }
  const Vector residual = f * (f.transpose() * beta) + lambda * beta - fy;
  if (residual.norm() > 1e-8 * std::max(fy.norm(), 1e-300) && fy.norm() > 0.0)
    throw FactorizationError("rf_ridge residual check failed");
  return beta;
}

struct OperatorPair {
  Matrix A;  // d x n
  Matrix B;  // d x d, B = A X^T
};

/// A = W^T (W X X^T W^T + lambda I)^-1 W X and B = A X^T.
inline OperatorPair compute_AB(const Matrix& w, const Matrix& x, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("compute_AB requires lambda > 0");
  if (w.cols() != x.rows()) throw DomainError("compute_AB: shape mismatch");
  const Matrix f = w * x;
  OperatorPair out;
  if (f.rows() <= f.cols()) {
    Matrix k = gram(f);
    k.diagonal().array() += lambda;
    out.A = w.transpose() * spd_factor(k).solve(f);
  } else {
    Matrix k = f.transpose() * f;
    k.diagonal().array() += lambda;
    out.A = spd_factor(k).solve(f.transpose() * w).transpose();
  }
  out.B = out.A * x.transpose();
  return out;
}

namespace sim_detail {

/// B and ||A||_F^2 for one draw, from S = X X^T when p <= n (never forming A).
struct TrialOperators {
  Matrix B;
  double frob_a_sq;
};

inline TrialOperators operators_from_gram(const Matrix& w, const Matrix& x, const Matrix& s, double lambda) {
  if (w.rows() > x.cols()) {
    OperatorPair ab = compute_AB(w, x, lambda);
    return {std::move(ab.B), ab.A.squaredNorm()};
  }
  Matrix k = w * s * w.transpose();
  k.diagonal().array() += lambda;
  const Matrix m = w.transpose() * spd_factor(k).solve(w);  // W^T K^-1 W, symmetric
  Matrix b = m * s;
  const double frob = b.cwiseProduct(m).sum();  // tr(M S M) = ||M X||_F^2
  return {std::move(b), frob};
}

struct MeanSe {
  double mean;
  double se;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  const double t = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double v : xs) sum += v;
  const double mean = sum / t;
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  const double var = xs.size() > 1 ? ss / (t - 1.0) : 0.0;
  return {mean, std::sqrt(var / t)};
}

}  // namespace sim_detail

// ---------------------------------------------------------------------------
// Monte Carlo decomposition

struct McConfig {
  ModelGeometry geometry;
  HyperParams hyper;
  Count trials = 300;
  std::uint64_t master_seed = 0;
  bool theta_resample = true;
  int threads = 1;

  McConfig(ModelGeometry g, HyperParams h, Count trials_, std::uint64_t seed, bool resample = true, int threads_ = 1)
      : geometry(g), hyper(h), trials(trials_), master_seed(seed), theta_resample(resample), threads(threads_) {
    if (trials < 2) throw DomainError("McConfig: trials must be >= 2");
    if (std::abs(hyper.rho() - geometry.rho()) > 1e-12 * geometry.rho())
      throw DomainError("McConfig: hyperparameters are bound to a different n/d");
  }

  /// Desk-scale defaults: d = 128, n = 64 d, 300 trials.
  static McConfig desk(double lambda0, double gamma, double sigma0_sq, std::uint64_t seed = 1, int threads = 1,
                       Count d = 128, double rho = 64.0, Count trials = 300) {
    const auto g = ModelGeometry::from_ratios(d, rho, gamma);
    return McConfig(g, HyperParams(lambda0, sigma0_sq, 1.0, g), trials, seed, true, threads);
  }
};

struct McDecomposition {
  Decomposition decomposition;
  double se_bias_sq = 0.0;
  double se_var_clean = 0.0;
  double se_var_noise = 0.0;
  double se_risk = 0.0;
  Count trials = 0;
  ModelGeometry geometry;
  HyperParams hyper;
};

inline void warn_low_rho(const McConfig& c) {
  if (c.geometry.rho() < 8.0)
    std::cerr << "warning: n/d = " << c.geometry.rho() << " is below 8; finite-size bias may dominate\n";
}

namespace sim_detail {

/// Reduces per-trial B matrices and scalar streams into the decomposition.
/// `frob_a` holds ||A_t||_F^2; `risk` (optional) holds sampled per-trial risks.
inline McDecomposition reduce(const McConfig& c, const std::vector<Matrix>& bs, const std::vector<double>& frob_a,
                              const std::vector<double>* sampled_risk) {
  const Index d = c.geometry.d();
  const double dd = static_cast<double>(d);
  const auto t = bs.size();
  const double tt = static_cast<double>(t);

  Matrix mean_b = Matrix::Zero(d, d);
  for (const auto& b : bs) mean_b += b;
  mean_b /= tt;
  Matrix centered = mean_b;
  centered.diagonal().array() -= 1.0;

  std::vector<double> bias_stream(t), clean_stream(t), noise_stream(t);
  for (std::size_t i = 0; i < t; ++i) {
    // Delta-method stream for ||mean B - I||^2 / d.
    Matrix bi = bs[i];
    bi.diagonal().array() -= 1.0;
    bias_stream[i] = 2.0 * bi.cwiseProduct(centered).sum() / dd;
    clean_stream[i] = (bs[i] - mean_b).squaredNorm() / dd * tt / (tt - 1.0);
    noise_stream[i] = c.hyper.sigma_sq() * frob_a[i] / dd;
  }
  McDecomposition out{Decomposition{}, 0, 0, 0, 0, static_cast<Count>(t), c.geometry, c.hyper};
  const double bias_sq = centered.squaredNorm() / dd;
  const MeanSe clean = mean_se(clean_stream);
  const MeanSe noise = mean_se(noise_stream);
  out.se_bias_sq = mean_se(bias_stream).se;
  out.se_var_noise = noise.se;

  if (sampled_risk == nullptr) {
    out.decomposition = Decomposition::from_parts(bias_sq, clean.mean, noise.mean);
    out.se_var_clean = clean.se;
    out.se_risk = std::sqrt(out.se_bias_sq * out.se_bias_sq + clean.se * clean.se + noise.se * noise.se);
  } else {
    const MeanSe risk = mean_se(*sampled_risk);
    out.decomposition = Decomposition{bias_sq, risk.mean - bias_sq - noise.mean, noise.mean, risk.mean};
    out.se_risk = risk.se;
    out.se_var_clean = std::sqrt(risk.se * risk.se + out.se_bias_sq * out.se_bias_sq + noise.se * noise.se);
  }
  return out;
}

}  // namespace sim_detail

/// Empirical decomposition of the two-layer model over (X, W) draws.
inline McDecomposition mc_decomposition(const McConfig& c) {
  if (!(c.hyper.lambda() > 0.0)) throw DomainError("mc_decomposition requires lambda > 0");
  warn_low_rho(c);
  const auto t = static_cast<std::size_t>(c.trials);
  std::vector<Matrix> bs(t);
  std::vector<double> frob(t);
  const double lambda = c.hyper.lambda();
  parallel_for(t, c.threads, [&](std::size_t i) {
    RngStream rng = derive_trial_rng(c.master_seed, i);
    const Matrix w = draw_first_layer(c.geometry, rng);
    const Matrix x = gaussian_matrix(c.geometry.d(), c.geometry.n(), 1.0 / std::sqrt(double(c.geometry.d())), rng);
    auto ops = sim_detail::operators_from_gram(w, x, gram(x), lambda);
    bs[i] = std::move(ops.B);
    frob[i] = ops.frob_a_sq;
  });
  return sim_detail::reduce(c, bs, frob, nullptr);
}

/// Variance_noise by sampling eps for one fixed (X, W): the per-test-point
/// variance of f over eps draws, averaged over x ~ N(0, I/d), i.e.
/// (1/d) E_eps ||A eps - mean||^2. Used to cross-check the eps-free estimate.
inline sim_detail::MeanSe sampled_noise_variance(const Matrix& w, const Matrix& x, double lambda, double sigma_sq,
                                                 int eps_draws, RngStream& rng) {
  const OperatorPair ab = compute_AB(w, x, lambda);
  const Index d = ab.A.rows();
  std::vector<Vector> outs;
  outs.reserve(static_cast<std::size_t>(eps_draws));
  Vector mean = Vector::Zero(d);
  for (int k = 0; k < eps_draws; ++k) {
    const Vector eps = gaussian_vector(x.cols(), std::sqrt(sigma_sq), rng);
    outs.push_back(ab.A * eps);
    mean += outs.back();
  }
  mean /= eps_draws;
  std::vector<double> stream;
  for (const auto& o : outs) stream.push_back((o - mean).squaredNorm() / double(d) * eps_draws / (eps_draws - 1.0));
  return sim_detail::mean_se(stream);
}

// ---------------------------------------------------------------------------
// Masked three-layer model

/// Scale of the random head mu.
enum class HeadScale {
  per_q,  // mu ~ N(0, 1/q)
  per_d,  // mu ~ N(0, 1/d), the kappa variant
};

namespace sim_detail {

/// Diagonal of Sigma = sum_i mu_i^2 D_i.
inline Vector mask_sigma(const Matrix& mask, const Vector& mu) {
  return mask.transpose() * mu.cwiseAbs2();
}

/// z solving (K Sigma + lambda I) z = F y with K = F F^T, via the SPD system
/// (S K S + lambda I) u = S F y, S = Sigma^{1/2}; then Sigma z = S u.
struct MaskedSolve {
  Vector z;
  Vector sigma_z;
};

inline MaskedSolve masked_solve_gram(const Matrix& k, const Vector& fy, const Vector& sigma, double lambda) {
  const Vector s = sigma.cwiseSqrt();
  Matrix g = s.asDiagonal() * k * s.asDiagonal();
  g.diagonal().array() += lambda;
  const Vector u = spd_factor(g).solve(s.cwiseProduct(fy));
  MaskedSolve out;
  out.sigma_z = s.cwiseProduct(u);
  out.z = (fy - k * out.sigma_z) / lambda;
  return out;
}

/// V_hat with rows V_i = mu_i D_i z.
inline Matrix assemble_v(const Matrix& mask, const Vector& mu, const Vector& z) {
  return mu.asDiagonal() * mask * z.asDiagonal();
}

}  // namespace sim_detail

/// Ridge solution of min_V ||((V o M) W X)^T mu - y||^2 + lambda ||V||_F^2.
/// Row i of the result is V_i^T = (1/lambda)(y^T - H) F^T (mu_i D_i) with
/// H = y^T F^T Sigma F (F^T Sigma F + lambda I)^-1.
inline Matrix masked_fit(const Matrix& w, const Matrix& x, const Vector& y, const Matrix& mask, const Vector& mu,
                         double lambda) {
  if (!(lambda > 0.0)) throw DomainError("masked_fit requires lambda > 0");
  if (w.cols() != x.rows() || x.cols() != y.size() || mask.cols() != w.rows() || mask.rows() != mu.size())
    throw DomainError("masked_fit: shape mismatch");
  for (Index j = 0; j < mask.cols(); ++j)
    for (Index i = 0; i < mask.rows(); ++i)
      if (mask(i, j) != 0.0 && mask(i, j) != 1.0) throw DomainError("masked_fit: mask entries must be 0 or 1");

  const Matrix f = w * x;
  const Vector fy = f * y;
  const Vector sigma = sim_detail::mask_sigma(mask, mu);
  Vector z;
  if (f.cols() <= f.rows()) {
    // n x n route: h = (F^T Sigma F + lambda I)^-1 y, so (y^T - H) = lambda h^T.
    Matrix k = f.transpose() * sigma.asDiagonal() * f;
    k.diagonal().array() += lambda;
    const Vector h = spd_factor(k).solve(y);
    z = f * h;
  } else {
    z = sim_detail::masked_solve_gram(gram(f), fy, sigma, lambda).z;
  }
  Matrix v = sim_detail::assemble_v(mask, mu, z);

  // Normal equations: mu_i D_i F (F^T c - y) + lambda V_i = 0 with c = sum_i mu_i D_i V_i.
  const Vector c = (mask.array().colwise() * mu.array()).matrix().cwiseProduct(v).colwise().sum().transpose();
  const Vector r = f * (f.transpose() * c - y);
  const Matrix grad = mu.asDiagonal() * mask * r.asDiagonal() + lambda * v;
  const Matrix scale = mu.asDiagonal() * mask * fy.asDiagonal();
  if (grad.norm() > 1e-8 * scale.norm() && scale.norm() > 0.0)
    throw FactorizationError("masked_fit normal-equation residual check failed");
  return v;
}

/// Effective linear map g^T = sum_i mu_i V_i^T D_i W of a masked fit.
inline Vector masked_effective_map(const Matrix& w, const Matrix& v, const Matrix& mask, const Vector& mu) {
  const Vector c = (mask.array().colwise() * mu.array()).matrix().cwiseProduct(v).colwise().sum().transpose();
  return w.transpose() * c;
}

struct MaskedOptions {
  HeadScale head = HeadScale::per_q;
};

/// Monte Carlo risk of the masked model and its decomposition. Requires
/// geometry.q() >= 1. alpha = 0 is accepted (the null predictor).
inline McDecomposition mc_masked_risk(const McConfig& c, double alpha, MaskedOptions opt = {}) {
  if (!c.geometry.has_q()) throw DomainError("mc_masked_risk requires q >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("mc_masked_risk requires alpha in [0,1]");
  if (!(c.hyper.lambda() > 0.0)) throw DomainError("mc_masked_risk requires lambda > 0");
  warn_low_rho(c);

  const ModelGeometry& g = c.geometry;
  const auto t = static_cast<std::size_t>(c.trials);
  const double lambda = c.hyper.lambda();
  const double sd_x = 1.0 / std::sqrt(double(g.d()));
  const double head_sd = 1.0 / std::sqrt(double(opt.head == HeadScale::per_q ? g.q() : g.d()));

  Vector fixed_theta;
  if (!c.theta_resample) {
    RngStream rng = derive_trial_rng(c.master_seed, ~std::uint64_t{0});
    fixed_theta = gaussian_vector(g.d(), 1.0, rng);
  }

  std::vector<Matrix> bs(t);
  std::vector<double> frob(t), risk(t);
  parallel_for(t, c.threads, [&](std::size_t i) {
    RngStream rng = derive_trial_rng(c.master_seed, i);
    const Matrix w = draw_first_layer(g, rng);
    const Matrix x = gaussian_matrix(g.d(), g.n(), sd_x, rng);
    Vector theta = c.theta_resample ? gaussian_vector(g.d(), 1.0, rng) : fixed_theta;
    const Vector eps = gaussian_vector(g.n(), std::sqrt(c.hyper.sigma_sq()), rng);
    Matrix mask(g.q(), g.p());
    for (Index jj = 0; jj < mask.cols(); ++jj)
      for (Index ii = 0; ii < mask.rows(); ++ii) mask(ii, jj) = rng.bernoulli(alpha) ? 1.0 : 0.0;
    const Vector mu = gaussian_vector(g.q(), head_sd, rng);

    const Matrix s = gram(x);
    const Matrix k = w * s * w.transpose();
    const Vector fy = w * (s * theta + x * eps);
    const Vector sigma = sim_detail::mask_sigma(mask, mu);

    // Fitted second layer and the predictor it induces.
    const auto solved = sim_detail::masked_solve_gram(k, fy, sigma, lambda);
    const Matrix v = sim_detail::assemble_v(mask, mu, solved.z);
    const Vector gmap = masked_effective_map(w, v, mask, mu);
    risk[i] = (gmap - theta).squaredNorm() / double(g.d());

    // Operators: g = Bm theta + Am eps with Am = W^T R^T G^-1 R F, R = Sigma^{1/2}.
    const Vector root = sigma.cwiseSqrt();
    Matrix gmat = root.asDiagonal() * k * root.asDiagonal();
    gmat.diagonal().array() += lambda;
    const Matrix rw = root.asDiagonal() * w;
    const Matrix m = rw.transpose() * spd_factor(gmat).solve(rw);
    bs[i] = m * s;
    frob[i] = bs[i].cwiseProduct(m).sum();
  });
  return sim_detail::reduce(c, bs, frob, &risk);
}

// ---------------------------------------------------------------------------
// Gap to the limiting operator

/// ||B~ B~^T - (n/d) A A^T||_2 for one draw of (X, W), with
/// B~ = W^T (W W^T + lambda0 I)^-1 W and A built at lambda = (n/d) lambda0.
inline double limit_operator_gap(const ModelGeometry& g, double lambda0, RngStream& rng) {
  if (!(lambda0 > 0.0)) throw DomainError("limit_operator_gap requires lambda0 > 0");
  const Matrix w = draw_first_layer(g, rng);
  const Matrix x = gaussian_matrix(g.d(), g.n(), 1.0 / std::sqrt(double(g.d())), rng);
  const Matrix s = gram(x);
  const double rho = g.rho();

  Matrix ww = w * w.transpose();
  ww.diagonal().array() += lambda0;
  const Matrix b_tilde = w.transpose() * spd_factor(ww).solve(w);

  Matrix k = w * s * w.transpose();
  k.diagonal().array() += rho * lambda0;
  const Matrix m = w.transpose() * spd_factor(k).solve(w);
  const Matrix aat = m * s * m;

  Matrix diff = b_tilde * b_tilde.transpose() - rho * aat;
  diff = 0.5 * (diff + diff.transpose()).eval();
  return spectral_norm_symmetric(diff).value;
}

}  // namespace rfnoise
