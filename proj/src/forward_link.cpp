#include "grsir/forward_link.hpp"

#include "grsir/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace grsir {

PiecewiseLinearLink::PiecewiseLinearLink(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size() || knots_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "a link needs at least 2 knots with matching values");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "link knots must be strictly increasing");
    }
  }
}

double PiecewiseLinearLink::operator()(double t) const {
  // Segment [k, k+1]; the first and last segments extend to infinity.
  const auto upper = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t k = upper == knots_.begin() ? 0 : static_cast<std::size_t>(upper - knots_.begin()) - 1;
  k = std::min(k, knots_.size() - 2);
  const double slope = (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
  return values_[k] + slope * (t - knots_[k]);
}

VectorXd PiecewiseLinearLink::operator()(const VectorXd& t) const {
  VectorXd out(t.size());
  for (Index i = 0; i < t.size(); ++i) out(i) = (*this)(t(i));
  return out;
}

Index default_link_bins(Index n) { return std::max<Index>(2, std::min<Index>(25, n / 10)); }

PiecewiseLinearLink fit_link(const VectorXd& index, const VectorXd& y, Index num_bins) {
  const Index n = index.size();
  if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "index and response lengths differ");
  if (num_bins < 2) throw Error(ErrorCode::InvalidArgument, "a link needs at least 2 bins");
  if (n < 2 * num_bins) {
    throw Error(ErrorCode::InvalidArgument, "need at least 2 observations per link bin (n=" +
                                                std::to_string(n) + ", bins=" +
                                                std::to_string(num_bins) + ")");
  }
  const double range = index.maxCoeff() - index.minCoeff();
  if (!(range >= 1e-12 * std::abs(index.mean()) + 1e-300)) {
    throw Error(ErrorCode::DegenerateIndex, "projected index is constant");
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return index(a) < index(b); });

  std::vector<double> knots;
  std::vector<double> values;
  std::vector<double> weights;
  for (Index bin = 0; bin < num_bins; ++bin) {
    const Index begin = bin * n / num_bins;
    const Index end = (bin + 1) * n / num_bins;
    double sum_t = 0.0;
    double sum_y = 0.0;
    for (Index i = begin; i < end; ++i) {
      sum_t += index(order[i]);
      sum_y += y(order[i]);
    }
    const auto count = static_cast<double>(end - begin);
    const double knot = sum_t / count;
    if (!knots.empty() && !(knot > knots.back())) {
      // Merge with the previous bin.
      const double total = weights.back() + count;
      knots.back() = (knots.back() * weights.back() + sum_t) / total;
      values.back() = (values.back() * weights.back() + sum_y) / total;
      weights.back() = total;
      continue;
    }
    knots.push_back(knot);
    values.push_back(sum_y / count);
    weights.push_back(count);
  }
  if (knots.size() < 2) {
    throw Error(ErrorCode::DegenerateIndex, "projected index has too few distinct values for a link");
  }
  return PiecewiseLinearLink(std::move(knots), std::move(values));
}

VectorXd projected_index(const VectorXd& b_hat, const VectorXd& x_bar, const MatrixXd& x) {
  if (x.cols() != b_hat.size() || x_bar.size() != b_hat.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "predictors have " + std::to_string(x.cols()) + " columns but the model expects " +
                    std::to_string(b_hat.size()));
  }
  return (x.rowwise() - x_bar.transpose()) * b_hat;
}

VectorXd predict(const PiecewiseLinearLink& link, const VectorXd& b_hat, const VectorXd& x_bar,
                 const MatrixXd& x_new) {
  return link(projected_index(b_hat, x_bar, x_new));
}

double mean_squared_error(const VectorXd& predicted, const VectorXd& actual) {
  if (predicted.size() != actual.size() || actual.size() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "prediction and response lengths differ");
  }
  return (predicted - actual).squaredNorm() / static_cast<double>(actual.size());
}

TauSelection select_tau_in_sample(const std::vector<double>& candidates, const MatrixXd& x,
                                  const VectorXd& y, const VectorXd& x_bar, Index num_bins,
                                  const std::function<VectorXd(double)>& direction_for_tau) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no tau candidates given");
  TauSelection out;
  out.training_mse = std::numeric_limits<double>::infinity();
  for (double tau : candidates) {
    double mse = std::numeric_limits<double>::quiet_NaN();
    try {
      const VectorXd b = direction_for_tau(tau);
      const VectorXd t = projected_index(b, x_bar, x);
      mse = mean_squared_error(fit_link(t, y, num_bins)(t), y);
    } catch (const Error& e) {
      if (!is_numerical(e.code())) throw;
    }
    out.mse_per_candidate.push_back(mse);
    if (mse < out.training_mse) {
      out.training_mse = mse;
      out.tau = tau;
    }
  }
  if (std::isinf(out.training_mse)) {
    throw Error(ErrorCode::NoSignal, "no tau candidate produced a usable fit");
  }
  return out;
}

}  // namespace grsir
