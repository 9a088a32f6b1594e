#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "rfnoise/core.hpp"

namespace rfnoise {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factor of an SPD matrix. On failure retries once with a diagonal
/// jitter of 1e-10 * trace / dim, then throws.
inline Eigen::LLT<Matrix> spd_factor(const Matrix& k) {
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * k.trace() / static_cast<double>(k.rows());
  Matrix kj = k;
  kj.diagonal().array() += jitter;
  llt.compute(kj);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("SPD factorization failed (dim " + std::to_string(k.rows()) + ")");
  return llt;
}

/// X X^T using a symmetric rank update.
inline Matrix gram(const Matrix& x) {
  Matrix s = Matrix::Zero(x.rows(), x.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(x);
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s;
}

inline void fill_gaussian(Matrix& m, double stddev, RngStream& rng) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal(stddev);
}

inline void fill_gaussian(Vector& v, double stddev, RngStream& rng) {
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.normal(stddev);
}

inline Matrix gaussian_matrix(Index rows, Index cols, double stddev, RngStream& rng) {
  Matrix m(rows, cols);
  fill_gaussian(m, stddev, rng);
  return m;
}

inline Vector gaussian_vector(Index size, double stddev, RngStream& rng) {
  Vector v(size);
  fill_gaussian(v, stddev, rng);
  return v;
}

struct SpectralNormResult {
  double value;
  int iterations;
};

/// Largest |eigenvalue| of a symmetric matrix by power iteration. Runs a fixed
/// warm start, then stops once ||D v|| changes by less than rel_tol.
inline SpectralNormResult spectral_norm_symmetric(const Matrix& sym, double rel_tol = 1e-6, int warm_start = 64,
                                                  int max_iterations = 10000) {
  const Index n = sym.rows();
  if (n == 0) return {0.0, 0};
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();

  double prev = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    Vector w = sym * v;
    const double est = w.norm();
    if (est == 0.0) return {0.0, it};
    v = w / est;
    if (it > warm_start && std::abs(est - prev) <= rel_tol * est) return {est, it};
    prev = est;
  }
  throw ConvergenceError("power iteration did not converge");
}

}  // namespace rfnoise
