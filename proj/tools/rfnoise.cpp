// rfnoise: sweeps of the random-feature ridge decomposition and the
// verification suite.
//
//   rfnoise analytic --gamma-grid 0.05:4:80 --lambda0 0.1 --sigma0-sq 0 --sigma0-sq 1 --out a.csv
//   rfnoise mc --gamma-grid 0.5:2:4 --trials 100 --seed 3 --out mc.csv
//   rfnoise estimator --gamma-grid 1:1:1 --sigma0-sq 1 --out est.csv
//   rfnoise verify quick

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfnoise/sweep.hpp"
#include "rfnoise/verify.hpp"

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct SweepFlags {
  std::string gamma_grid = "0.05:4:80";
  bool gamma_geometric = false;
  std::string alpha_grid;
  bool alpha_geometric = false;
  std::optional<double> alpha;
  std::vector<double> lambda0{0.1};
  std::vector<double> sigma0_sq;
  std::optional<double> kappa;
  bool kappa_tie_gamma = false;
  rfnoise::Count d = 128;
  double rho = 64.0;
  rfnoise::Count trials = 300;
  std::uint64_t seed = 1;
  std::string clean_form = "corrected";
  std::string out;
  int threads = 1;
  std::vector<std::string> sources;
  double q_ratio = 4.0;
  rfnoise::Count splits = 5;
  rfnoise::Count test_size = 1000;
};

void add_sweep_flags(CLI::App* app, SweepFlags& f, bool sampled) {
  app->add_option("--gamma-grid", f.gamma_grid, "width ratio grid start:stop:steps")->capture_default_str();
  app->add_flag("--gamma-geometric", f.gamma_geometric, "geometric spacing for the gamma grid");
  app->add_option("--lambda0", f.lambda0, "ridge strength(s) lambda0")->delimiter(',')->capture_default_str();
  app->add_option("--sigma0-sq", f.sigma0_sq, "noise level(s) sigma0^2, repeatable (default 0)")->delimiter(',');
  app->add_option("--clean-form", f.clean_form, "literal | gamma-scaled | corrected")->capture_default_str();
  app->add_option("--out", f.out, "output CSV path")->required();
  app->add_option("--threads", f.threads, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
  if (!sampled) {
    app->add_option("--sources", f.sources, "analytic and/or quadrature (default analytic)")->delimiter(',');
  }
  if (sampled) {
    app->add_option("--d", f.d, "input dimension")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--rho", f.rho, "sample ratio n/d")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--trials", f.trials, "Monte Carlo trials / estimator repetitions")->capture_default_str();
    app->add_option("--seed", f.seed, "master seed")->capture_default_str();
  }
}

void add_mask_flags(CLI::App* app, SweepFlags& f) {
  auto* grid = app->add_option("--alpha-grid", f.alpha_grid, "density grid start:stop:steps");
  app->add_flag("--alpha-geometric", f.alpha_geometric, "geometric spacing for the alpha grid");
  app->add_option("--alpha", f.alpha, "fixed density")->excludes(grid);
  auto* kappa = app->add_option("--kappa", f.kappa, "q/d for the N(0,1/d)-head variant");
  app->add_flag("--kappa-tie-gamma", f.kappa_tie_gamma, "variant with kappa = gamma")->excludes(kappa);
  app->add_option("--q-ratio", f.q_ratio, "q/d for the masked model without --kappa")->capture_default_str();
}

rfnoise::SweepSpec to_spec(const SweepFlags& f, std::vector<rfnoise::Source> sources) {
  using namespace rfnoise;
  SweepSpec s;
  s.gamma = parse_grid(f.gamma_grid, f.gamma_geometric ? Spacing::geometric : Spacing::linear);
  if (!f.alpha_grid.empty())
    s.alpha_grid = parse_grid(f.alpha_grid, f.alpha_geometric ? Spacing::geometric : Spacing::linear);
  s.alpha = f.alpha;
  s.lambda0 = f.lambda0;
  s.sigma0_sq = f.sigma0_sq.empty() ? std::vector<double>{0.0} : f.sigma0_sq;
  s.kappa = f.kappa;
  s.kappa_tie_gamma = f.kappa_tie_gamma;
  s.sources = std::move(sources);
  s.clean_form = parse_clean_form(f.clean_form);
  s.q_ratio = f.q_ratio;
  s.splits = f.splits;
  s.test_size = f.test_size;
  s.threads = f.threads;
  if (s.has(Source::mc) || s.has(Source::estimator)) s.budget = McBudget{f.d, f.rho, f.trials, f.seed};
  s.validate();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias-variance decomposition of random-feature ridge regression under label noise"};
  app.require_subcommand(1);

  SweepFlags an, mc, est;
  auto* cmd_an = app.add_subcommand("analytic", "closed-form (and quadrature) sweep");
  add_sweep_flags(cmd_an, an, false);
  add_mask_flags(cmd_an, an);

  auto* cmd_mc = app.add_subcommand("mc", "Monte Carlo sweep; also writes <out>.se.csv");
  add_sweep_flags(cmd_mc, mc, true);
  add_mask_flags(cmd_mc, mc);

  auto* cmd_est = app.add_subcommand("estimator", "split-based estimator sweep");
  add_sweep_flags(cmd_est, est, true);
  cmd_est->add_option("--splits", est.splits, "disjoint training splits")->capture_default_str();
  cmd_est->add_option("--test-size", est.test_size, "clean test points")->capture_default_str();

  std::string level = "quick";
  rfnoise::VerifyOptions vopt;
  auto* cmd_verify = app.add_subcommand("verify", "run the verification suite");
  cmd_verify->add_option("level", level, "quick | full")->check(CLI::IsMember({"quick", "full"}))->capture_default_str();
  cmd_verify->add_option("--threads", vopt.threads, "worker threads")->check(CLI::Range(1, 1024));
  cmd_verify->add_option("--seed", vopt.seed, "master seed for sampled checks")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  using namespace rfnoise;
  try {
    if (cmd_verify->parsed()) {
      const auto results = run_verify(level == "full" ? VerifyLevel::full : VerifyLevel::quick, vopt);
      print_report(std::cout, results);
      const bool ok = all_pass(results);
      std::cout << (ok ? "verify: all checks passed\n" : "verify: some checks FAILED\n");
      return ok ? 0 : kExitCheckFailed;
    }

    SweepSpec spec;
    std::string out;
    if (cmd_an->parsed()) {
      std::vector<Source> sources;
      for (const auto& s : an.sources) {
        const Source src = parse_source(s);
        if (src != Source::analytic && src != Source::quadrature)
          throw std::invalid_argument("analytic accepts --sources analytic,quadrature");
        sources.push_back(src);
      }
      if (sources.empty()) sources.push_back(Source::analytic);
      spec = to_spec(an, sources);
      out = an.out;
    } else if (cmd_mc->parsed()) {
      spec = to_spec(mc, {Source::mc});
      out = mc.out;
    } else {
      spec = to_spec(est, {Source::estimator});
      out = est.out;
    }
    write_sweep(run_sweep(spec), out);
    return 0;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
