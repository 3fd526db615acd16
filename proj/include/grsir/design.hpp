#pragma once

// Slicing of the response, the indicator basis, and the empirical moments
// (W, M, Sigma-hat, Gamma-hat) every estimator in the library consumes.
// All moments use the 1/n divisor.

#include <Eigen/Dense>

#include <vector>

namespace grsir {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// n observations of a p-dimensional predictor and a scalar response.
/// Construction validates shapes (n >= 2, p >= 1) and finiteness.
class Dataset {
 public:
  Dataset(MatrixXd x, VectorXd y);

  const MatrixXd& x() const { return x_; }
  const VectorXd& y() const { return y_; }
  Index n() const { return x_.rows(); }
  Index p() const { return x_.cols(); }

 private:
  MatrixXd x_;
  VectorXd y_;
};

/// Partition of the observations into num_slices slices of the response.
/// Labels are 0-based: slice j in [0, num_slices). The last slice is the
/// one dropped by the indicator basis.
struct SliceAssignment {
  std::vector<Index> labels;
  std::vector<Index> counts;
  VectorXd proportions;
  /// num_slices - 1 cut values; y <= boundaries[j] falls in a slice <= j.
  std::vector<double> boundaries;

  Index num_slices() const { return static_cast<Index>(counts.size()); }
  Index num_basis() const { return num_slices() - 1; }
};

/// Equal-count slicing by quantiles of y. Tie groups are never split across
/// slices, so sizes differ by at most one only when y has no ties.
/// Throws DegenerateResponse when fewer distinct values than slices exist.
SliceAssignment make_slices(const VectorXd& y, Index num_slices);

/// n x h matrix of slice indicators for the first h = num_slices - 1 slices.
MatrixXd indicator_basis(const SliceAssignment& assignment);

struct DesignMoments {
  MatrixXd w;            // h x h covariance of s(Y)
  MatrixXd m;            // h x p cross-moment of s(Y) and X
  MatrixXd sigma_hat;    // p x p covariance of X
  MatrixXd gamma_hat;    // p x p between-slice covariance
  VectorXd x_bar;        // p
  VectorXd s_bar;        // h
  MatrixXd slice_means;  // num_slices x p
  VectorXd proportions;  // num_slices
  Index n = 0;

  Index p() const { return sigma_hat.rows(); }
  Index h() const { return w.rows(); }
};

/// Empirical moments for an arbitrary n x h basis evaluation. The slice
/// assignment supplies Gamma-hat and the slice means.
DesignMoments compute_moments(const Dataset& data, const MatrixXd& basis,
                              const SliceAssignment& assignment);

/// Slices y into num_slices groups and computes the indicator-basis moments.
DesignMoments sliced_moments(const Dataset& data, Index num_slices);

/// Closed-form inverse of the indicator-basis W from the slice proportions
/// f_1..f_{h+1}: diag(1/f_1..1/f_h) + U / f_{h+1}, U the all-ones matrix.
MatrixXd w_inverse_indicator(const VectorXd& proportions);

/// M^t W^-1 M. Equals Gamma-hat for the indicator basis.
/// Throws SingularBasisCovariance when W is not positive definite.
MatrixXd signal_matrix(const DesignMoments& moments);

}  // namespace grsir
