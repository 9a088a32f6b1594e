#pragma once

// Shared domain types and the deterministic RNG contract.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rfnoise {

using Count = std::int64_t;

/// Raised when an input lies outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative numerical routine fails to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimensions of the random-feature models. The ratios are always derived
/// from the integer fields, never stored independently.
class ModelGeometry {
 public:
  ModelGeometry(Count d, Count n, Count p, Count q = 0) : d_(d), n_(n), p_(p), q_(q) {
    if (d < 1 || n < 1 || p < 1) throw DomainError("ModelGeometry: d, n, p must be >= 1");
    if (q < 0) throw DomainError("ModelGeometry: q must be >= 0");
  }

  /// Geometry with n = rho*d and p = round(gamma*d) (at least 1).
  static ModelGeometry from_ratios(Count d, double rho, double gamma, Count q = 0) {
    const auto n = static_cast<Count>(std::llround(rho * static_cast<double>(d)));
    const auto p = std::max<Count>(1, static_cast<Count>(std::llround(gamma * static_cast<double>(d))));
    return ModelGeometry(d, n, p, q);
  }

  Count d() const { return d_; }
  Count n() const { return n_; }
  Count p() const { return p_; }
  Count q() const { return q_; }
  bool has_q() const { return q_ >= 1; }

  double gamma() const { return static_cast<double>(p_) / static_cast<double>(d_); }
  double rho() const { return static_cast<double>(n_) / static_cast<double>(d_); }
  double kappa() const {
    return has_q() ? static_cast<double>(q_) / static_cast<double>(d_) : std::nan("");
  }

  ModelGeometry with_q(Count q) const { return ModelGeometry(d_, n_, p_, q); }

 private:
  Count d_, n_, p_, q_;
};

/// Scaled hyperparameters (lambda0, sigma0^2, alpha) bound to a sample ratio
/// rho = n/d, which fixes the raw ridge parameter and noise variance.
class HyperParams {
 public:
  HyperParams(double lambda0, double sigma0_sq, double alpha, double rho)
      : lambda0_(lambda0), sigma0_sq_(sigma0_sq), alpha_(alpha), rho_(rho) {
    if (!(lambda0 >= 0.0)) throw DomainError("HyperParams: lambda0 must be >= 0");
    if (!(sigma0_sq >= 0.0)) throw DomainError("HyperParams: sigma0_sq must be >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("HyperParams: alpha must lie in [0,1]");
    if (!(rho > 0.0)) throw DomainError("HyperParams: rho must be > 0");
  }
  HyperParams(double lambda0, double sigma0_sq, double alpha, const ModelGeometry& g)
      : HyperParams(lambda0, sigma0_sq, alpha, g.rho()) {}

  double lambda0() const { return lambda0_; }
  double sigma0_sq() const { return sigma0_sq_; }
  double alpha() const { return alpha_; }
  double rho() const { return rho_; }
  double lambda() const { return rho_ * lambda0_; }
  double sigma_sq() const { return rho_ * sigma0_sq_; }

 private:
  double lambda0_, sigma0_sq_, alpha_, rho_;
};

/// Risk = Bias^2 + Variance_clean + Variance_noise.
struct Decomposition {
  double bias_sq = 0.0;
  double var_clean = 0.0;
  double var_noise = 0.0;
  double risk = 0.0;

  static Decomposition from_parts(double bias_sq, double var_clean, double var_noise) {
    return {bias_sq, var_clean, var_noise, bias_sq + var_clean + var_noise};
  }
};

// ---------------------------------------------------------------------------
// RNG

/// 64-bit finalizer from splitmix64.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// A single-owner random stream. Gaussian draws use the engine's standard
/// normal transform, so streams are reproducible within one build only.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  RngStream(const RngStream&) = delete;
  RngStream& operator=(const RngStream&) = delete;
  RngStream(RngStream&&) = default;
  RngStream& operator=(RngStream&&) = default;

  double normal() { return normal_(engine_); }
  double normal(double stddev) { return stddev * normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli(double p) { return uniform_(engine_) < p; }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Independent deterministic stream for one trial of an experiment.
inline RngStream derive_trial_rng(std::uint64_t master_seed, std::uint64_t trial_index) {
  const std::uint64_t mixed = splitmix64(splitmix64(master_seed) ^ splitmix64(~trial_index));
  return RngStream(mixed);
}

}  // namespace rfnoise
