#pragma once

// Forward map y ~ g(b^t (x - x_bar)) with g piecewise linear.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace grsir {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class PiecewiseLinearLink {
 public:
  /// knots strictly increasing, same length as values, at least 2.
  PiecewiseLinearLink(std::vector<double> knots, std::vector<double> values);

  /// Linear interpolation between knots; the boundary segments' slopes are
  /// used beyond the first and last knot.
  double operator()(double t) const;
  VectorXd operator()(const VectorXd& t) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// min(25, n / 10), but never below 2.
Index default_link_bins(Index n);

/// Knots at the mean index of each of num_bins equal-count bins of the
/// sorted index, values at the matching mean response. Bins whose mean index
/// coincides (heavy ties) are merged.
/// Throws DegenerateIndex when the index is (nearly) constant.
PiecewiseLinearLink fit_link(const VectorXd& index, const VectorXd& y, Index num_bins);

/// b^t (x_i - x_bar) for every row of x.
VectorXd projected_index(const VectorXd& b_hat, const VectorXd& x_bar, const MatrixXd& x);

VectorXd predict(const PiecewiseLinearLink& link, const VectorXd& b_hat, const VectorXd& x_bar,
                 const MatrixXd& x_new);

double mean_squared_error(const VectorXd& predicted, const VectorXd& actual);

/// In-sample tau selection: for each candidate the caller's fit produces a
/// direction, the link is refit on the training index, and the candidate with
/// the smallest training MSE wins. Training error rewards overfitting, so the
/// chosen tau is optimistic.
struct TauSelection {
  double tau = 0.0;
  double training_mse = 0.0;
  std::vector<double> mse_per_candidate;  // NaN where the fit failed
};
TauSelection select_tau_in_sample(const std::vector<double>& candidates, const MatrixXd& x,
                                  const VectorXd& y, const VectorXd& x_bar, Index num_bins,
                                  const std::function<VectorXd(double)>& direction_for_tau);

}  // namespace grsir
