#pragma once

// Verification checks: analytic identities, closed form vs quadrature oracle,
// Monte Carlo convergence, masking equivalence, gap ordering, estimator
// sanity and output determinism. Each check carries its tolerance so a report
// is self-describing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rfnoise/analytic.hpp"
#include "rfnoise/estimator.hpp"
#include "rfnoise/quadrature.hpp"
#include "rfnoise/simulator.hpp"
#include "rfnoise/sweep.hpp"

namespace rfnoise {

struct Check {
  std::string name;
  double measured = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string rule;  // how measured is compared against tol
  bool informational = false;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.informational || c.pass; });
  }
};

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// `CHECK <name> measured=<v> tol=<t> PASS|FAIL`; informational checks end in INFO.
inline std::string check_line(const Check& c) {
  std::string s = "CHECK " + c.name + " measured=" + format_real(c.measured) + " tol=" + format_real(c.tol) + " ";
  if (c.informational) return s + "INFO";
  return s + (c.pass ? "PASS" : "FAIL");
}

struct VerifyOptions {
  int threads = 1;
  std::uint64_t seed = 20211;
  /// Closed form under test for the quadrature comparison; replaceable so a
  /// deliberately corrupted formula can demonstrate the oracle's independence.
  std::function<double(double, double, double)> closed_form_noise = [](double l, double g, double s) {
    return variance_noise(l, g, s);
  };
};

namespace verify_detail {

inline Check at_most(std::string name, double measured, double tol, std::string rule = "measured <= tol") {
  return {std::move(name), measured, tol, measured <= tol, std::move(rule)};
}

inline Check info(std::string name, double measured, double tol, std::string rule) {
  Check c{std::move(name), measured, tol, measured <= tol, std::move(rule)};
  c.informational = true;
  return c;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Sign changes of the discrete differences, ignoring steps below eps.
inline int sign_changes(const std::vector<double>& v, double eps = 1e-15) {
  int changes = 0, last = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double diff = v[i] - v[i - 1];
    const int sgn = diff > eps ? 1 : (diff < -eps ? -1 : 0);
    if (sgn == 0) continue;
    if (last != 0 && sgn != last) ++changes;
    last = sgn;
  }
  return changes;
}

inline std::vector<double> linspace(double a, double b, int n) { return GridSpec{a, b, n, Spacing::linear}.values(); }

}  // namespace verify_detail

// ---------------------------------------------------------------------------
// Criterion 1: closed form vs Marchenko-Pastur quadrature.

inline CriterionResult verify_quadrature_agreement(const VerifyOptions& opt = {}) {
  using namespace verify_detail;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double l : {1e-3, 0.05, 0.1, 1.0, 10.0}) {
    for (double g : {0.05, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0}) {
      const double closed = opt.closed_form_noise(l, g, 1.0);
      const double quad = mp_variance_noise_quadrature(l, g, 1.0);
      worst = std::max(worst, std::abs(closed - quad) / std::max(std::abs(closed), 1e-12));
    }
  }
  const double elapsed = seconds_since(t0);
  CriterionResult r{1, "closed form vs quadrature", {}};
  r.checks.push_back(at_most("closed_form_vs_quadrature_max_rel_diff", worst, 1e-8));
  r.checks.push_back(at_most("closed_form_vs_quadrature_runtime_s", elapsed, 5.0));
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 2: exact limits.

inline CriterionResult verify_limits() {
  using namespace verify_detail;
  CriterionResult r{2, "exact limits", {}};
  const double h = 1e-6;
  double worst_noise = 0.0, worst_bias = 0.0, worst_noise_limit = 0.0, worst_bias_limit = 0.0;
  for (double l : {1e-3, 0.05, 0.1, 1.0, 10.0}) {
    worst_noise = std::max(worst_noise, std::abs(variance_noise(l, h, 1.0)));
    worst_bias = std::max(worst_bias, std::abs(bias_squared(l, h) - 1.0));
    // First-order extrapolation to gamma -> 0+ from the same evaluation point.
    worst_noise_limit =
        std::max(worst_noise_limit, std::abs(2.0 * variance_noise(l, h, 1.0) - variance_noise(l, 2.0 * h, 1.0)));
    worst_bias_limit =
        std::max(worst_bias_limit, std::abs(2.0 * bias_squared(l, h) - bias_squared(l, 2.0 * h) - 1.0));
  }
  r.checks.push_back(at_most("variance_noise_at_gamma_1e-6", worst_noise, 1e-9, "max_l |variance_noise(l,1e-6,1)| <= tol"));
  r.checks.push_back(at_most("bias_sq_at_gamma_1e-6", worst_bias, 1e-9, "max_l |bias_squared(l,1e-6) - 1| <= tol"));
  r.checks.push_back(info("variance_noise_gamma0_extrapolated", worst_noise_limit, 1e-9,
                          "|2 f(1e-6) - f(2e-6)|: the gamma->0+ limit from the same point"));
  r.checks.push_back(info("bias_sq_gamma0_extrapolated", worst_bias_limit, 1e-9,
                          "|2 f(1e-6) - f(2e-6) - 1|: the gamma->0+ limit from the same point"));
  for (double g : {0.25, 1.0, 3.0}) {
    const double dev = std::abs(variance_noise(1e-8, g, 1.0) - std::min(g, 1.0));
    r.checks.push_back(at_most("ridgeless_identity_gamma_" + format_real(g), dev, 1e-6,
                               "|variance_noise(1e-8,g,1) - min(g,1)| <= tol"));
  }
  r.checks.push_back(info("ridgeless_identity_gamma_1_exact_point", std::abs(variance_noise(0.0, 1.0, 1.0) - 1.0),
                          1e-12, "|variance_noise(0,1,1) - 1| (continuous extension)"));
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 3: MC Variance_noise anchor.

inline CriterionResult verify_noise_anchor(const VerifyOptions& opt = {}) {
  using namespace verify_detail;
  const auto t0 = std::chrono::steady_clock::now();
  const auto mc = mc_decomposition(McConfig::desk(0.1, 1.0, 1.0, opt.seed, opt.threads));
  const double elapsed = seconds_since(t0);
  const double anchor = variance_noise(0.1, 1.0, 1.0);
  CriterionResult r{3, "noise-variance Monte Carlo anchor", {}};
  r.checks.push_back(at_most("anchor_closed_form_vs_0.615861", std::abs(anchor - 0.615861), 5e-7));
  r.checks.push_back(at_most("mc_var_noise_vs_0.615861", std::abs(mc.decomposition.var_noise - 0.615861), 0.05,
                             "|mc var_noise - 0.615861| <= tol"));
  r.checks.push_back(at_most("mc_anchor_runtime_s", elapsed, 120.0));
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 4: component-wise convergence.

inline CriterionResult verify_decomposition_convergence(const VerifyOptions& opt = {}) {
  using namespace verify_detail;
  CriterionResult r{4, "full decomposition convergence", {}};
  for (double l : {0.05, 0.1}) {
    for (double g : {0.5, 1.0, 2.0}) {
      const auto mc = mc_decomposition(McConfig::desk(l, g, 0.64, opt.seed, opt.threads)).decomposition;
      const auto an = decomposition(l, g, 0.64, CleanVarianceForm::corrected);
      const std::string at = "_l" + format_real(l) + "_g" + format_real(g);
      r.checks.push_back(at_most("bias_sq" + at, std::abs(mc.bias_sq - an.bias_sq), 0.05, "|mc - analytic| <= tol"));
      r.checks.push_back(
          at_most("var_clean" + at, std::abs(mc.var_clean - an.var_clean), 0.05, "|mc - analytic| <= tol"));
      r.checks.push_back(
          at_most("var_noise" + at, std::abs(mc.var_noise - an.var_noise), 0.05, "|mc - analytic| <= tol"));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 5: masking acts as lambda0 -> lambda0/alpha.

inline CriterionResult verify_pruning_equivalence(const VerifyOptions& opt = {}) {
  using namespace verify_detail;
  CriterionResult r{5, "masking equivalence", {}};
  const Count d = 128, q = 512;
  for (double alpha : {0.25, 0.5, 1.0}) {
    const auto g = ModelGeometry::from_ratios(d, 64.0, 1.0, q);
    const McConfig masked(g, HyperParams(0.05, 0.64, alpha, g), 300, opt.seed, true, opt.threads);
    const double masked_risk = mc_masked_risk(masked, alpha).decomposition.risk;
    const double two_layer = mc_decomposition(McConfig::desk(0.05 / alpha, 1.0, 0.64, opt.seed, opt.threads))
                                 .decomposition.risk;
    r.checks.push_back(at_most("masked_vs_two_layer_alpha_" + format_real(alpha), std::abs(masked_risk - two_layer),
                               0.05, "|mc_masked_risk(alpha) - mc risk at lambda0/alpha| <= tol"));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 6: Limit-operator gap shrinks with n/d.

inline std::vector<double> operator_gap_means(const std::vector<double>& rhos, Count d, double gamma, double lambda0,
                                            int seeds, std::uint64_t master, int threads) {
  std::vector<double> means;
  for (double rho : rhos) {
    const auto g = ModelGeometry::from_ratios(d, rho, gamma);
    std::vector<double> gaps(static_cast<std::size_t>(seeds));
    parallel_for(gaps.size(), threads, [&](std::size_t s) {
      RngStream rng = derive_trial_rng(master, s);
      gaps[s] = limit_operator_gap(g, lambda0, rng);
    });
    double sum = 0.0;
    for (double v : gaps) sum += v;
    means.push_back(sum / seeds);
  }
  return means;
}

inline CriterionResult verify_operator_gap_ordering(const VerifyOptions& opt = {}) {
  using namespace verify_detail;
  const auto means = operator_gap_means({2.0, 8.0, 64.0}, 64, 2.0, 0.1, 20, opt.seed, opt.threads);
  CriterionResult r{6, "operator-gap ordering", {}};
  // Reported as the smaller of the two successive decreases; must be > 0.
  const double margin = std::min(means[0] - means[1], means[1] - means[2]);
  Check c{"mean_gap_strictly_decreasing_rho_2_8_64", margin, 0.0, margin > 0.0, "min successive decrease > tol"};
  r.checks.push_back(c);
  for (std::size_t i = 0; i < means.size(); ++i)
    r.checks.push_back(info("mean_gap_rho_" + format_real(std::vector<double>{2, 8, 64}[i]), means[i],
                            std::numeric_limits<double>::infinity(), "reported"));
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 7: qualitative shapes of the analytic curves and heatmaps.

struct HeatmapArgmin {
  std::size_t gamma_index, alpha_index;
  double value;
};

inline HeatmapArgmin pruned_heatmap_argmin(const std::vector<double>& gammas, const std::vector<double>& alphas,
                                           double lambda0, double sigma0_sq, CleanVarianceForm form) {
  HeatmapArgmin best{0, 0, std::numeric_limits<double>::infinity()};
  for (std::size_t a = 0; a < alphas.size(); ++a)
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      const double risk = pruned_decomposition(lambda0, gammas[g], alphas[a], sigma0_sq, form).risk;
      if (risk < best.value) best = {g, a, risk};
    }
  return best;
}

inline CriterionResult verify_shapes() {
  using namespace verify_detail;
  CriterionResult r{7, "shape suite", {}};
  const double l = 0.05;
  const auto gammas = linspace(0.05, 4.0, 80);
  const auto alphas = linspace(0.02, 1.0, 50);

  std::vector<double> noise, bias, clean, risk;
  for (double g : gammas) {
    const auto dec = decomposition(l, g, 0.64);
    noise.push_back(dec.var_noise);
    bias.push_back(dec.bias_sq);
    clean.push_back(dec.var_clean);
    risk.push_back(dec.risk);
  }
  double worst_noise_drop = 0.0, worst_bias_rise = 0.0;
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    worst_noise_drop = std::max(worst_noise_drop, noise[i - 1] - noise[i]);
    worst_bias_rise = std::max(worst_bias_rise, bias[i] - bias[i - 1]);
  }
  r.checks.push_back(at_most("var_noise_nondecreasing_max_drop", worst_noise_drop, 0.0));
  r.checks.push_back(at_most("bias_sq_nonincreasing_max_rise", worst_bias_rise, 0.0));
  r.checks.push_back(at_most("var_clean_corrected_sign_changes", sign_changes(clean), 1.0));

  const auto argmin = static_cast<std::size_t>(std::min_element(risk.begin(), risk.end()) - risk.begin());
  const bool interior = argmin > 0 && argmin + 1 < risk.size();
  r.checks.push_back({"risk_sigma0sq_0.64_argmin_gamma_index", double(argmin), double(risk.size() - 1), interior,
                      "0 < argmin index < tol"});

  const auto noisy = pruned_heatmap_argmin(gammas, alphas, l, 0.64, CleanVarianceForm::corrected);
  const bool noisy_interior = noisy.gamma_index > 0 && noisy.gamma_index + 1 < gammas.size() &&
                              noisy.alpha_index > 0 && noisy.alpha_index + 1 < alphas.size();
  r.checks.push_back({"heatmap_sigma0_0.8_argmin_interior(gamma=" + format_real(gammas[noisy.gamma_index]) +
                          ",alpha=" + format_real(alphas[noisy.alpha_index]) + ")",
                      noisy.value, 0.0, noisy_interior, "argmin strictly inside the (gamma, alpha) grid"});

  const auto scaled = pruned_heatmap_argmin(gammas, alphas, l, 0.64, CleanVarianceForm::gamma_scaled);
  const bool scaled_interior = scaled.gamma_index > 0 && scaled.gamma_index + 1 < gammas.size() &&
                               scaled.alpha_index > 0 && scaled.alpha_index + 1 < alphas.size();
  Check scaled_check{"heatmap_sigma0_0.8_argmin_interior_gamma_scaled_form(gamma=" +
                         format_real(gammas[scaled.gamma_index]) + ",alpha=" + format_real(alphas[scaled.alpha_index]) +
                         ")",
                     scaled.value, 0.0, scaled_interior, "same check under the rejected gamma-scaled form"};
  scaled_check.informational = true;
  r.checks.push_back(scaled_check);

  const auto clean_map = pruned_heatmap_argmin(gammas, alphas, l, 0.0, CleanVarianceForm::corrected);
  const bool corner = clean_map.gamma_index + 1 == gammas.size() && clean_map.alpha_index + 1 == alphas.size();
  r.checks.push_back({"heatmap_sigma0_0_argmin_at_gamma_max_alpha_1", clean_map.value, 0.0, corner,
                      "argmin at (gamma_max, alpha=1)"});

  double worst_rise = 0.0;
  for (std::size_t a = 0; a < alphas.size(); ++a)
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      const double here = pruned_decomposition(l, gammas[g], alphas[a], 0.0).risk;
      if (g > 0) worst_rise = std::max(worst_rise, here - pruned_decomposition(l, gammas[g - 1], alphas[a], 0.0).risk);
      if (a > 0) worst_rise = std::max(worst_rise, here - pruned_decomposition(l, gammas[g], alphas[a - 1], 0.0).risk);
    }
  r.checks.push_back(at_most("heatmap_sigma0_0_nonincreasing_max_rise", worst_rise, 1e-12));
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 8: literal form defect witness.

inline CriterionResult verify_literal_witness() {
  using namespace verify_detail;
  CriterionResult r{8, "literal-form defect witness", {}};
  r.checks.push_back(at_most("literal_at_0_0.25_vs_-0.9375",
                             std::abs(variance_clean(0.0, 0.25, CleanVarianceForm::literal) + 0.9375), 1e-12));
  double worst = 0.0;
  for (double g : {0.1, 0.25, 0.5, 0.9})
    worst = std::max(worst, std::abs(variance_clean(0.0, g, CleanVarianceForm::corrected) - g * (1.0 - g)));
  r.checks.push_back(at_most("corrected_ridgeless_vs_gamma(1-gamma)", worst, 1e-9));
  return r;
}

// ---------------------------------------------------------------------------
// Form selection: which Variance_clean reading the simulator agrees with.

inline CriterionResult verify_clean_form_selection(const VerifyOptions& opt = {}) {
  using namespace verify_detail;
  CriterionResult r{0, "clean-variance form selection", {}};
  // lambda0 = 1, gamma = 0.5 separates the three readings widely.
  const auto mc = mc_decomposition(McConfig::desk(1.0, 0.5, 0.0, opt.seed, opt.threads)).decomposition;
  double best = std::numeric_limits<double>::infinity();
  CleanVarianceForm chosen = CleanVarianceForm::corrected;
  for (auto f : {CleanVarianceForm::literal, CleanVarianceForm::gamma_scaled, CleanVarianceForm::corrected}) {
    const double dist = std::abs(mc.var_clean - variance_clean(1.0, 0.5, f));
    r.checks.push_back(info("distance_mc_to_" + std::string(to_string(f)), dist, 0.05, "|mc var_clean - form|"));
    if (dist < best) best = dist, chosen = f;
  }
  r.checks.push_back({"selected_form_is_corrected", best, 0.05, chosen == CleanVarianceForm::corrected && best <= 0.05,
                      "closest form is `corrected` and within tol"});
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 9: split estimator sanity.

inline CriterionResult verify_estimator(const VerifyOptions& opt = {}) {
  using namespace verify_detail;
  CriterionResult r{9, "estimator sanity", {}};
  {
    // p >= d, almost ridgeless, m = 32 d examples per split, no noise.
    const Count d = 64;
    const auto g = ModelGeometry::from_ratios(d, 5.0 * 32.0, 2.0);
    const HyperParams hp(1e-6, 0.0, 1.0, g);
    RngStream rng = derive_trial_rng(opt.seed, 0);
    const auto ds = gen_dataset(g, hp.sigma_sq(), rng);
    SplitOptions so;
    so.threads = opt.threads;
    const auto est = split_estimate(ds, 5, g, hp, 1000, rng, so);
    r.checks.push_back(at_most("noiseless_bias_sq_est", est.bias_sq_est, 0.05));
    r.checks.push_back(at_most("noiseless_variance_est", est.variance_est, 0.05));
  }
  {
    const Count d = 64;
    const auto g = ModelGeometry::from_ratios(d, 5.0 * 16.0, 1.0);
    int wins = 0;
    for (int s = 0; s < 20; ++s) {
      double var[2];
      for (int k = 0; k < 2; ++k) {
        const HyperParams hp(0.1, k == 0 ? 0.0 : 1.0, 1.0, g);
        RngStream rng = derive_trial_rng(opt.seed + 1000, static_cast<std::uint64_t>(s));
        const auto ds = gen_dataset(g, hp.sigma_sq(), rng);
        SplitOptions so;
        so.threads = opt.threads;
        var[k] = split_estimate(ds, 5, g, hp, 1000, rng, so).variance_est;
      }
      if (var[1] > var[0]) ++wins;
    }
    r.checks.push_back({"paired_noise_response_wins_of_20", double(wins), 18.0, wins >= 18, "measured >= tol"});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 10: byte-identical MC sweeps.

inline SweepSpec determinism_spec(int threads) {
  SweepSpec s;
  s.gamma = GridSpec{0.5, 2.0, 3, Spacing::linear};
  s.lambda0 = {0.1};
  s.sigma0_sq = {0.0, 1.0};
  s.sources = {Source::analytic, Source::mc};
  s.budget = McBudget{32, 16.0, 24, 7};
  s.threads = threads;
  return s;
}

inline CriterionResult verify_determinism() {
  CriterionResult r{10, "determinism", {}};
  auto render = [](int threads, bool masked) {
    SweepSpec s = determinism_spec(threads);
    if (masked) s.alpha_grid = GridSpec{0.5, 1.0, 2, Spacing::linear};
    const auto out = run_sweep(s);
    return to_csv_text(out.rows) + to_csv_text(out.se_rows);
  };
  for (bool masked : {false, true}) {
    const std::string a = render(1, masked), b = render(1, masked), c = render(8, masked);
    const std::string tag = masked ? "masked" : "two_layer";
    r.checks.push_back({"repeat_run_byte_identical_" + tag, a == b ? 0.0 : 1.0, 0.0, a == b, "byte mismatch count"});
    r.checks.push_back(
        {"threads_1_vs_8_byte_identical_" + tag, a == c ? 0.0 : 1.0, 0.0, a == c, "byte mismatch count"});
  }
  return r;
}

// ---------------------------------------------------------------------------

enum class VerifyLevel { quick, full };

inline std::vector<CriterionResult> run_verify(VerifyLevel level, const VerifyOptions& opt = {}) {
  std::vector<CriterionResult> out;
  out.push_back(verify_quadrature_agreement(opt));
  out.push_back(verify_limits());
  out.push_back(verify_shapes());
  out.push_back(verify_literal_witness());
  if (level == VerifyLevel::full) {
    out.push_back(verify_noise_anchor(opt));
    out.push_back(verify_decomposition_convergence(opt));
    out.push_back(verify_pruning_equivalence(opt));
    out.push_back(verify_operator_gap_ordering(opt));
    out.push_back(verify_clean_form_selection(opt));
    out.push_back(verify_estimator(opt));
    out.push_back(verify_determinism());
  }
  return out;
}

inline void print_report(std::ostream& os, const std::vector<CriterionResult>& results) {
  os << "# tolerance table\n";
  for (const auto& r : results)
    for (const auto& c : r.checks) os << "# " << c.name << ": " << c.rule << ", tol=" << format_real(c.tol) << "\n";
  for (const auto& r : results)
    for (const auto& c : r.checks) os << check_line(c) << "\n";
}

inline bool all_pass(const std::vector<CriterionResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass(); });
}

}  // namespace rfnoise
