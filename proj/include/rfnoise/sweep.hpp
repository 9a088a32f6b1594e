#pragma once

// Parameter sweeps producing SweepRecord rows. Backs the `analytic`, `mc` and
// `estimator` subcommands of the rfnoise CLI.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfnoise/analytic.hpp"
#include "rfnoise/csv.hpp"
#include "rfnoise/estimator.hpp"
#include "rfnoise/grid.hpp"
#include "rfnoise/quadrature.hpp"
#include "rfnoise/simulator.hpp"

namespace rfnoise {

struct McBudget {
  Count d = 128;
  double rho = 64.0;
  Count trials = 300;
  std::uint64_t seed = 1;
};

struct SweepSpec {
  GridSpec gamma{0.05, 4.0, 80, Spacing::linear};
  std::optional<GridSpec> alpha_grid;
  std::optional<double> alpha;  // fixed density; ignored when alpha_grid is set
  std::vector<double> lambda0{0.1};
  std::vector<double> sigma0_sq{0.0};
  std::optional<double> kappa;
  bool kappa_tie_gamma = false;
  std::vector<Source> sources{Source::analytic};
  std::optional<McBudget> budget;
  CleanVarianceForm clean_form = CleanVarianceForm::corrected;
  double q_ratio = 4.0;  // q = q_ratio * d for the masked model without kappa
  Count splits = 5;      // estimator only
  Count test_size = 1000;
  int threads = 1;

  bool has(Source s) const { return std::find(sources.begin(), sources.end(), s) != sources.end(); }
  bool masked() const { return alpha_grid.has_value() || alpha.has_value() || variant(); }
  bool variant() const { return kappa.has_value() || kappa_tie_gamma; }

  std::vector<double> alpha_values() const {
    if (alpha_grid) return alpha_grid->values();
    if (alpha) return {*alpha};
    return {1.0};
  }

  double kappa_for(double gamma_value) const {
    if (kappa_tie_gamma) return gamma_value;
    if (kappa) return *kappa;
    return std::nan("");
  }

  void validate() const {
    if (sources.empty()) throw std::invalid_argument("at least one source is required");
    if (lambda0.empty() || sigma0_sq.empty()) throw std::invalid_argument("lambda0 and sigma0_sq lists must be non-empty");
    if (gamma.steps < 1 || (alpha_grid && alpha_grid->steps < 1)) throw std::invalid_argument("grids must be non-empty");
    const bool sampled = has(Source::mc) || has(Source::estimator);
    if (sampled != budget.has_value())
      throw std::invalid_argument("an MC budget is required exactly when mc or estimator rows are requested");
    if (kappa && kappa_tie_gamma) throw std::invalid_argument("--kappa and --kappa-tie-gamma are exclusive");
    if (kappa && !(*kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
    for (double a : alpha_values())
      if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha values must lie in [0,1]");
    if (splits < 2) throw std::invalid_argument("splits must be >= 2");
  }
};

struct SweepOutput {
  std::vector<SweepRecord> rows;
  std::vector<SweepRecord> se_rows;  // standard errors for mc rows, same schema
};

namespace sweep_detail {

inline SweepRecord base_record(Source s, double lambda0, double gamma, double alpha, double sigma0_sq, double kappa) {
  SweepRecord r;
  r.source = s;
  r.lambda0 = lambda0;
  r.gamma = gamma;
  r.alpha = alpha;
  r.sigma0_sq = sigma0_sq;
  r.kappa = kappa;
  return r;
}

/// lambda0 after the masking substitution, or nullopt for the alpha = 0 limit.
inline std::optional<double> effective_lambda0(const SweepSpec& spec, double lambda0, double alpha, double kappa) {
  if (!spec.masked()) return lambda0;
  if (alpha == 0.0) return std::nullopt;
  return spec.variant() ? lambda0 / (kappa * alpha) : lambda0 / alpha;
}

inline Decomposition analytic_point(const SweepSpec& spec, double lambda0, double gamma, double alpha,
                                    double sigma0_sq, double kappa) {
  if (!spec.masked()) return decomposition(lambda0, gamma, sigma0_sq, spec.clean_form);
  if (alpha == 0.0) return null_predictor_decomposition();
  if (spec.variant()) return variant_decomposition(lambda0, gamma, kappa, alpha, sigma0_sq, spec.clean_form);
  return pruned_decomposition(lambda0, gamma, alpha, sigma0_sq, spec.clean_form);
}

inline void mc_point(const SweepSpec& spec, double lambda0, double gamma, double alpha, double sigma0_sq,
                     double kappa, SweepOutput& out) {
  const McBudget& b = *spec.budget;
  Count q = 0;
  if (spec.masked()) {
    const double ratio = spec.variant() ? kappa : spec.q_ratio;
    q = std::max<Count>(1, static_cast<Count>(std::llround(ratio * double(b.d))));
  }
  const auto g = ModelGeometry::from_ratios(b.d, b.rho, gamma, q);
  const McConfig cfg(g, HyperParams(lambda0, sigma0_sq, alpha, g), b.trials, b.seed, true, spec.threads);
  const McDecomposition mc =
      spec.masked() ? mc_masked_risk(cfg, alpha, {spec.variant() ? HeadScale::per_d : HeadScale::per_q})
                    : mc_decomposition(cfg);

  SweepRecord r = base_record(Source::mc, lambda0, gamma, alpha, sigma0_sq, kappa);
  r.d = g.d();
  r.n = g.n();
  r.p = g.p();
  r.trials = b.trials;
  r.seed = b.seed;
  r.set(mc.decomposition);
  out.rows.push_back(r);

  SweepRecord se = r;
  se.bias_sq = mc.se_bias_sq;
  se.var_clean = mc.se_var_clean;
  se.var_noise = mc.se_var_noise;
  se.risk = mc.se_risk;
  out.se_rows.push_back(se);
}

inline void estimator_point(const SweepSpec& spec, double lambda0, double gamma, double sigma0_sq,
                            SweepOutput& out) {
  const McBudget& b = *spec.budget;
  const auto g = ModelGeometry::from_ratios(b.d, b.rho, gamma);
  const HyperParams hyper(lambda0, sigma0_sq, 1.0, g);
  const auto reps = static_cast<std::size_t>(b.trials);
  std::vector<SplitEstimate> ests(reps);
  parallel_for(reps, spec.threads, [&](std::size_t r) {
    RngStream rng = derive_trial_rng(b.seed, r);
    const SyntheticDataset ds = gen_dataset(g, hyper.sigma_sq(), rng);
    ests[r] = split_estimate(ds, spec.splits, g, hyper, spec.test_size, rng);
  });
  double loss = 0.0, var = 0.0, bias = 0.0;
  for (const auto& e : ests) {
    loss += e.avg_test_loss;
    var += e.variance_est;
    bias += e.bias_sq_est;
  }
  const double t = double(reps);
  SweepRecord r = base_record(Source::estimator, lambda0, gamma, 1.0, sigma0_sq, std::nan(""));
  r.d = g.d();
  r.n = g.n();
  r.p = g.p();
  r.trials = b.trials;
  r.seed = b.seed;
  // The split estimator measures total variance only; it is stored in
  // var_clean and var_noise is left undetermined.
  r.bias_sq = bias / t;
  r.var_clean = var / t;
  r.var_noise = std::nan("");
  r.risk = loss / t;
  out.rows.push_back(r);
}

}  // namespace sweep_detail

/// Rows ordered by lambda0, gamma, alpha, sigma0_sq, then source
/// (analytic, quadrature, mc, estimator).
inline SweepOutput run_sweep(const SweepSpec& spec) {
  using namespace sweep_detail;
  spec.validate();
  SweepOutput out;
  const auto gammas = spec.gamma.values();
  const auto alphas = spec.alpha_values();
  for (double lambda0 : spec.lambda0) {
    for (double gamma : gammas) {
      const double kappa = spec.kappa_for(gamma);
      for (double alpha : alphas) {
        for (double s2 : spec.sigma0_sq) {
          if (spec.has(Source::analytic)) {
            SweepRecord r = base_record(Source::analytic, lambda0, gamma, alpha, s2, kappa);
            r.set(analytic_point(spec, lambda0, gamma, alpha, s2, kappa));
            out.rows.push_back(r);
          }
          if (spec.has(Source::quadrature)) {
            SweepRecord r = base_record(Source::quadrature, lambda0, gamma, alpha, s2, kappa);
            const auto eff = effective_lambda0(spec, lambda0, alpha, kappa);
            r.bias_sq = r.var_clean = r.risk = std::nan("");
            r.var_noise = eff ? mp_variance_noise_quadrature(*eff, gamma, s2) : 0.0;
            out.rows.push_back(r);
          }
          if (spec.has(Source::mc)) mc_point(spec, lambda0, gamma, alpha, s2, kappa, out);
          if (spec.has(Source::estimator) && alpha == alphas.front())
            estimator_point(spec, lambda0, gamma, s2, out);
        }
      }
    }
  }
  return out;
}

inline std::string to_csv_text(const std::vector<SweepRecord>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

/// Writes `path` and, when there are standard-error rows, `path.se.csv`.
inline void write_sweep(const SweepOutput& out, const std::string& path) {
  auto dump = [](const std::string& p, const std::vector<SweepRecord>& rows) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + p + "' for writing");
    f << to_csv_text(rows);
    if (!f) throw std::runtime_error("write to '" + p + "' failed");
  };
  dump(path, out.rows);
  if (!out.se_rows.empty()) dump(path + ".se.csv", out.se_rows);
}

}  // namespace rfnoise
