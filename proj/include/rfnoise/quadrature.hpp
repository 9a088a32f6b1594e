#pragma once

// Gauss-Legendre rules and the Marchenko-Pastur integral behind Variance_noise.
// This is the independent oracle for the noise-variance closed form in analytic.hpp;
// it must not call into that header.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "rfnoise/core.hpp"

namespace rfnoise {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// Newton iteration on the three-term Legendre recurrence.
inline GaussLegendreRule make_gauss_legendre(int order) {
  if (order < 1) throw DomainError("Gauss-Legendre order must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(order - 1 - i)] = x;
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.weights[static_cast<std::size_t>(order - 1 - i)] = w;
    rule.weights[static_cast<std::size_t>(i)] = w;
  }
  return rule;
}

/// Process-wide cache of rules; safe for concurrent callers.
inline const GaussLegendreRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussLegendreRule>(make_gauss_legendre(order));
  return *slot;
}

/// Integral of f over [a, b] with a fixed-order rule.
template <typename F>
double integrate_fixed(const F& f, double a, double b, int order) {
  const auto& rule = gauss_legendre(order);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

struct QuadratureResult {
  double value;
  double last_change;  // |I(2N) - I(N)| at acceptance
  int order;
};

/// Doubles the rule order until successive estimates agree. Accepts once the
/// change is below max(1e-16, min(abs_tol, rel_floor |I|));
/// at max_order, accepts if the change is within abs_tol and throws otherwise.
template <typename F>
QuadratureResult integrate_doubling(const F& f, double a, double b, double abs_tol = 1e-10,
                                    double rel_floor = 1e-13, int start_order = 16, int max_order = 8192) {
  double prev = integrate_fixed(f, a, b, start_order);
  for (int order = 2 * start_order; order <= max_order; order *= 2) {
    const double cur = integrate_fixed(f, a, b, order);
    const double change = std::abs(cur - prev);
    if (change <= std::max(1e-16, std::min(abs_tol, rel_floor * std::abs(cur))))
      return {cur, change, order};
    if (order * 2 > max_order) {
      if (change <= abs_tol) return {cur, change, order};
      throw ConvergenceError("quadrature did not reach tolerance; last change " + std::to_string(change));
    }
    prev = cur;
  }
  throw ConvergenceError("quadrature order range empty");
}

/// The Marchenko-Pastur integral
///   (1/2pi) Int_{eta-}^{eta+} sqrt((eta+ - x)(x - eta-)) (a x/eta)^2 / (eta x (1 + a x/eta)^2) dx
/// with a = 1/lambda0, eta = 1/gamma, eta(+/-) = (1 +/- sqrt(eta))^2. This is
/// (1/d)||W^T (W W^T + lambda0 I)^-1 W||_F^2 in the limit. Evaluated after the
/// substitution x = m + r cos(t), which turns the square-root weight into
/// r^2 sin^2(t) on t in [0, pi].
inline QuadratureResult mp_frobenius_integral(double lambda0, double gamma) {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) throw DomainError("quadrature oracle requires lambda0 > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("quadrature oracle requires gamma > 0");
  const double a = 1.0 / lambda0;
  const double eta = 1.0 / gamma;
  const double s = std::sqrt(eta);
  const double hi = (1.0 + s) * (1.0 + s);
  const double lo = (1.0 - s) * (1.0 - s);
  const double m = 0.5 * (hi + lo), r = 0.5 * (hi - lo);

  auto integrand = [=](double t) {
    const double x = m + r * std::cos(t);
    if (x <= 0.0) return 0.0;
    const double sn = std::sin(t);
    const double u = a * x / eta;
    return r * r * sn * sn * u * u / (eta * x * (1.0 + u) * (1.0 + u));
  };
  auto res = integrate_doubling(integrand, 0.0, std::numbers::pi);
  res.value /= 2.0 * std::numbers::pi;
  res.last_change /= 2.0 * std::numbers::pi;
  return res;
}

/// sigma0^2 times the Marchenko-Pastur integral.
inline double mp_variance_noise_quadrature(double lambda0, double gamma, double sigma0_sq) {
  if (!(sigma0_sq >= 0.0)) throw DomainError("sigma0_sq must be >= 0");
  return sigma0_sq * mp_frobenius_integral(lambda0, gamma).value;
}

}  // namespace rfnoise
