#pragma once

#include "grsir/design.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace grsir::testing {

// Test-only instances drawn with the standard library generator, not the
// library's own RNG.
inline MatrixXd gaussian_matrix(std::mt19937_64& gen, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  MatrixXd out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(gen);
  return out;
}

inline VectorXd unit(const VectorXd& v) { return v / v.norm(); }

inline double squared_cosine(const VectorXd& a, const VectorXd& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return c * c;
}

// Correlated predictors, single-index response, columns scaled to unit variance.
inline Dataset random_dataset(std::uint64_t seed, Index n, Index p, double noise = 0.1) {
  std::mt19937_64 gen(seed);
  const MatrixXd mix = MatrixXd::Identity(p, p) + 0.4 * gaussian_matrix(gen, p, p) / std::sqrt(double(p));
  MatrixXd x = gaussian_matrix(gen, n, p) * mix;
  const VectorXd sd = ((x.rowwise() - x.colwise().mean()).colwise().squaredNorm() / double(n))
                          .cwiseSqrt()
                          .transpose();
  for (Index j = 0; j < p; ++j) x.col(j) /= sd(j);
  const VectorXd beta = unit(gaussian_matrix(gen, p, 1).col(0));
  const VectorXd t = x * beta;
  std::normal_distribution<double> eps(0.0, noise);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) y(i) = t(i) + 0.5 * std::sin(2.0 * t(i)) + eps(gen);
  return Dataset(std::move(x), std::move(y));
}

inline double max_abs(const MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace grsir::testing
