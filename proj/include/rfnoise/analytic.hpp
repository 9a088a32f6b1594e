#pragma once

// Closed-form asymptotics of random-feature ridge regression with label noise.
//
// Regime: n, d, p -> infinity with n/d -> infinity and p/d = gamma. The ridge
// parameter and noise variance are scaled as lambda = (n/d) lambda0 and
// sigma^2 = (n/d) sigma0^2.

#include <cmath>
#include <string>
#include <string_view>

#include "rfnoise/core.hpp"

namespace rfnoise {

/// Which reading of the Variance_clean expression to evaluate.
///
/// - literal: the two-branch expression with leading term Phi1/(2 Phi2).
///   Negative for many inputs, e.g. -0.9375 at (lambda0, gamma) = (0, 0.25).
/// - gamma_scaled: the literal expression with the leading term divided by the
///   branch argument (gamma for gamma <= 1, 1/gamma otherwise). Exact only at
///   lambda0 = 0 or gamma = 1.
/// - corrected: Phi1/(2 Phi2) - (gamma - 1)/2 - Phi3^2/4 on both branches.
///   Equals (1/d) E||B~||_F^2 - (1 - Phi3/2)^2, the clean variance of the
///   limiting operator B~ = W^T (W W^T + lambda0 I)^-1 W. Default.
enum class CleanVarianceForm { literal, gamma_scaled, corrected };

inline std::string_view to_string(CleanVarianceForm f) {
  switch (f) {
    case CleanVarianceForm::literal: return "literal";
    case CleanVarianceForm::gamma_scaled: return "gamma-scaled";
    case CleanVarianceForm::corrected: return "corrected";
  }
  return "?";
}

inline CleanVarianceForm parse_clean_form(std::string_view s) {
  if (s == "literal") return CleanVarianceForm::literal;
  if (s == "gamma-scaled" || s == "gamma_scaled") return CleanVarianceForm::gamma_scaled;
  if (s == "corrected") return CleanVarianceForm::corrected;
  throw DomainError("unknown clean-variance form '" + std::string(s) + "'");
}

struct Phi {
  double phi1;
  double phi2;
  double phi3;
};

namespace analytic_detail {

inline void check_lambda0(double lambda0) {
  if (!(lambda0 >= 0.0) || !std::isfinite(lambda0)) throw DomainError("lambda0 must be finite and >= 0");
}

/// (lambda0+1)^2 + 2(lambda0-1) gamma + gamma^2, checked for sign.
inline double radicand(double lambda0, double gamma) {
  const double r = (lambda0 + 1.0) * (lambda0 + 1.0) + 2.0 * (lambda0 - 1.0) * gamma + gamma * gamma;
  if (r < -1e-12) throw DomainError("negative radicand " + std::to_string(r));
  return r < 0.0 ? 0.0 : r;
}

/// Phi1 / (2 Phi2), continued by its limit 0 at the single zero of Phi2
/// (lambda0 = 0, gamma = 1).
inline double half_ratio(const Phi& f) { return f.phi2 == 0.0 ? 0.0 : f.phi1 / (2.0 * f.phi2); }

}  // namespace analytic_detail

/// Phi1, Phi2, Phi3 for lambda0 >= 0, gamma >= 0.
inline Phi phi(double lambda0, double gamma) {
  analytic_detail::check_lambda0(lambda0);
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be finite and >= 0");
  const double p1 = lambda0 * (gamma + 1.0) + (gamma - 1.0) * (gamma - 1.0);
  const double p2 = std::sqrt(analytic_detail::radicand(lambda0, gamma));
  return {p1, p2, p2 - lambda0 - gamma + 1.0};
}

inline double bias_squared(double lambda0, double gamma) {
  const double p3 = phi(lambda0, gamma).phi3;
  return 0.25 * p3 * p3;
}

inline double variance_clean(double lambda0, double gamma,
                             CleanVarianceForm form = CleanVarianceForm::corrected) {
  if (!(gamma > 0.0)) throw DomainError("variance_clean requires gamma > 0");
  const Phi here = phi(lambda0, gamma);
  const double tail = 0.25 * here.phi3 * here.phi3;

  if (form == CleanVarianceForm::corrected)
    return analytic_detail::half_ratio(here) - 0.5 * (gamma - 1.0) - tail;

  const double scale_arg = gamma <= 1.0 ? gamma : 1.0 / gamma;
  const Phi lead = gamma <= 1.0 ? here : phi(lambda0, 1.0 / gamma);
  double leading = analytic_detail::half_ratio(lead);
  if (form == CleanVarianceForm::gamma_scaled) leading /= scale_arg;
  const double middle = gamma <= 1.0 ? (1.0 - gamma) * (1.0 - 2.0 * gamma) / (2.0 * gamma) : 0.5 * (gamma - 1.0);
  return leading - middle - tail;
}

/// Variance_noise / sigma0^2.
inline double variance_noise_unit(double lambda0, double gamma) {
  analytic_detail::check_lambda0(lambda0);
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be finite and >= 0");
  const double l = lambda0, g = gamma;
  const double root = std::sqrt(analytic_detail::radicand(l, g));
  if (root == 0.0) return 1.0;  // (0, 1): ridgeless limit min(gamma, 1)
  const double numer = g * g + (3.0 * l - 2.0) * g + 2.0 * l * l + 3.0 * l + 1.0;
  return 0.5 * (g + 2.0 * l + 1.0 - numer / root);
}

inline double variance_noise(double lambda0, double gamma, double sigma0_sq) {
  if (!(sigma0_sq >= 0.0)) throw DomainError("sigma0_sq must be >= 0");
  return sigma0_sq * variance_noise_unit(lambda0, gamma);
}

inline Decomposition decomposition(double lambda0, double gamma, double sigma0_sq,
                                   CleanVarianceForm form = CleanVarianceForm::corrected) {
  return Decomposition::from_parts(bias_squared(lambda0, gamma), variance_clean(lambda0, gamma, form),
                                   variance_noise(lambda0, gamma, sigma0_sq));
}

/// Masked three-layer model with Bernoulli(alpha) masks and N(0, 1/q) head:
/// the two-layer decomposition at lambda0/alpha.
inline Decomposition pruned_decomposition(double lambda0, double gamma, double alpha, double sigma0_sq,
                                          CleanVarianceForm form = CleanVarianceForm::corrected) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("pruned_decomposition requires alpha in (0,1]");
  return decomposition(lambda0 / alpha, gamma, sigma0_sq, form);
}

/// Limit of pruned_decomposition as alpha -> 0+: the null predictor.
inline Decomposition null_predictor_decomposition() { return Decomposition::from_parts(1.0, 0.0, 0.0); }

/// Masked model with an N(0, 1/d) head and q = kappa d: lambda0 -> lambda0/(kappa alpha).
inline Decomposition variant_decomposition(double lambda0, double gamma, double kappa, double alpha,
                                           double sigma0_sq,
                                           CleanVarianceForm form = CleanVarianceForm::corrected) {
  if (!(kappa > 0.0)) throw DomainError("variant_decomposition requires kappa > 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("variant_decomposition requires alpha in (0,1]");
  return decomposition(lambda0 / (kappa * alpha), gamma, sigma0_sq, form);
}

}  // namespace rfnoise
