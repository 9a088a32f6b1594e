#pragma once

// Split-based bias-variance estimator on the random-feature model: train one
// copy per disjoint split of the training set, measure the average test loss
// and the variance of predictions across copies, and report the squared bias
// as their difference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rfnoise/core.hpp"
#include "rfnoise/linalg.hpp"
#include "rfnoise/parallel.hpp"
#include "rfnoise/simulator.hpp"

namespace rfnoise {

struct SplitEstimate {
  double avg_test_loss = 0.0;
  double variance_est = 0.0;
  double bias_sq_est = 0.0;
  Count n_splits = 0;
  Count test_points = 0;
};

struct SplitOptions {
  /// Reuse one first layer for every split instead of a fresh draw per copy.
  bool fixed_w = false;
  /// Test mode: every copy trains on the first split's data.
  bool identical_splits = false;
  int threads = 1;
};

/// Examples beyond n_splits * floor(n / n_splits) are dropped. Each split is
/// fit with lambda = (m/d) lambda0, m the split size, so lambda0 stays fixed.
inline SplitEstimate split_estimate(const SyntheticDataset& data, Count n_splits, const ModelGeometry& g,
                                    const HyperParams& hyper, Count test_size, RngStream& rng,
                                    SplitOptions opt = {}) {
  const Count n = data.X.cols();
  if (n_splits < 2) throw DomainError("split_estimate requires n_splits >= 2");
  if (n_splits > n) throw DomainError("split_estimate: more splits than examples");
  if (test_size < 100) throw DomainError("split_estimate requires test_size >= 100");
  if (data.X.rows() != g.d()) throw DomainError("split_estimate: dataset does not match geometry");
  if (!(hyper.lambda0() > 0.0)) throw DomainError("split_estimate requires lambda0 > 0");

  const Count m = n / n_splits;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng.engine());

  const double lambda_split = static_cast<double>(m) / static_cast<double>(g.d()) * hyper.lambda0();
  const std::uint64_t split_seed = rng.next_u64();

  // Clean test set shared by all copies.
  const Matrix x_test = gaussian_matrix(g.d(), test_size, 1.0 / std::sqrt(double(g.d())), rng);
  const Vector y_test = x_test.transpose() * data.theta;

  Matrix shared_w;
  if (opt.fixed_w) {
    RngStream wrng = derive_trial_rng(split_seed, ~std::uint64_t{0});
    shared_w = draw_first_layer(g, wrng);
  }

  const auto splits = static_cast<std::size_t>(n_splits);
  Matrix preds(test_size, n_splits);
  parallel_for(splits, opt.threads, [&](std::size_t k) {
    const std::size_t src = opt.identical_splits ? 0 : k;
    Matrix xs(g.d(), m);
    Vector ys(m);
    for (Count j = 0; j < m; ++j) {
      const Index col = order[src * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)];
      xs.col(j) = data.X.col(col);
      ys(j) = data.y(col);
    }
    Matrix w;
    if (opt.fixed_w) {
      w = shared_w;
    } else {
      RngStream wrng = derive_trial_rng(split_seed, src);
      w = draw_first_layer(g, wrng);
    }
    const Vector beta = rf_ridge(w, xs, ys, lambda_split);
    preds.col(static_cast<Index>(k)) = x_test.transpose() * (w.transpose() * beta);
  });

  SplitEstimate est;
  est.n_splits = n_splits;
  est.test_points = test_size;
  double loss = 0.0;
  for (Index k = 0; k < preds.cols(); ++k) loss += (preds.col(k) - y_test).squaredNorm() / double(test_size);
  est.avg_test_loss = loss / double(n_splits);

  const Vector mean_pred = preds.rowwise().mean();
  const double spread = (preds.colwise() - mean_pred).squaredNorm();
  est.variance_est = spread / (double(n_splits) - 1.0) / double(test_size);
  est.bias_sq_est = est.avg_test_loss - est.variance_est;
  return est;
}

}  // namespace rfnoise
