#include "grsir/design.hpp"

#include "grsir/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

namespace grsir {

namespace {

MatrixXd symmetrized(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

Dataset::Dataset(MatrixXd x, VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() != y_.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "predictor rows (" + std::to_string(x_.rows()) + ") != response length (" +
                    std::to_string(y_.size()) + ")");
  }
  if (x_.rows() < 2) throw Error(ErrorCode::InvalidArgument, "dataset needs at least 2 observations");
  if (x_.cols() < 1) throw Error(ErrorCode::InvalidArgument, "dataset needs at least 1 predictor");
  if (!x_.allFinite() || !y_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "dataset contains non-finite values");
  }
}

SliceAssignment make_slices(const VectorXd& y, Index num_slices) {
  const Index n = y.size();
  if (num_slices < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 slices");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return y(a) < y(b); });

  // Tie groups as [begin, end) ranges over the sorted order.
  std::vector<std::pair<Index, Index>> groups;
  for (Index i = 0; i < n;) {
    Index j = i + 1;
    while (j < n && y(order[j]) == y(order[i])) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  const auto num_groups = static_cast<Index>(groups.size());
  if (num_groups < num_slices) {
    throw Error(ErrorCode::DegenerateResponse,
                "response has " + std::to_string(num_groups) + " distinct values, fewer than " +
                    std::to_string(num_slices) + " slices");
  }

  // Rounded cumulative count at which slice s should end.
  auto target = [&](Index s) { return (2 * (s + 1) * n + num_slices) / (2 * num_slices); };

  SliceAssignment out;
  out.labels.assign(static_cast<std::size_t>(n), 0);
  out.counts.assign(static_cast<std::size_t>(num_slices), 0);

  Index slice = 0;
  Index cumulative = 0;
  for (Index g = 0; g < num_groups; ++g) {
    const auto [begin, end] = groups[static_cast<std::size_t>(g)];
    const Index size = end - begin;
    const bool last = slice == num_slices - 1;
    if (!last && out.counts[slice] > 0) {
      const bool must_close = num_groups - g == num_slices - 1 - slice;
      const Index t = target(slice);
      const bool closer_before =
          cumulative < t && cumulative + size > t && t - cumulative < cumulative + size - t;
      if (must_close || closer_before) ++slice;
    }
    for (Index k = begin; k < end; ++k) out.labels[order[k]] = slice;
    out.counts[slice] += size;
    cumulative += size;
    if (slice < num_slices - 1 && cumulative >= target(slice) &&
        num_groups - g - 1 >= num_slices - 1 - slice) {
      ++slice;
    }
  }
  for (Index c : out.counts) {
    if (c == 0) throw Error(ErrorCode::DegenerateResponse, "a slice is empty after tie handling");
  }

  out.proportions.resize(num_slices);
  for (Index j = 0; j < num_slices; ++j) {
    out.proportions(j) = static_cast<double>(out.counts[j]) / static_cast<double>(n);
  }

  // Cut values halfway between adjacent slices in sorted order.
  Index position = 0;
  for (Index j = 0; j + 1 < num_slices; ++j) {
    position += out.counts[j];
    out.boundaries.push_back(0.5 * (y(order[position - 1]) + y(order[position])));
  }
  return out;
}

MatrixXd indicator_basis(const SliceAssignment& assignment) {
  const auto n = static_cast<Index>(assignment.labels.size());
  const Index h = assignment.num_basis();
  MatrixXd basis = MatrixXd::Zero(n, h);
  for (Index i = 0; i < n; ++i) {
    const Index label = assignment.labels[i];
    if (label < h) basis(i, label) = 1.0;
  }
  return basis;
}

DesignMoments compute_moments(const Dataset& data, const MatrixXd& basis,
                              const SliceAssignment& assignment) {
  const Index n = data.n();
  if (basis.rows() != n || static_cast<Index>(assignment.labels.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "basis/assignment rows do not match the dataset");
  }
  const auto nd = static_cast<double>(n);

  DesignMoments mom;
  mom.n = n;
  mom.x_bar = data.x().colwise().mean().transpose();
  const MatrixXd xc = data.x().rowwise() - mom.x_bar.transpose();
  mom.sigma_hat = symmetrized(xc.transpose() * xc / nd);

  mom.s_bar = basis.colwise().mean().transpose();
  const MatrixXd sc = basis.rowwise() - mom.s_bar.transpose();
  mom.w = symmetrized(sc.transpose() * sc / nd);
  mom.m = sc.transpose() * xc / nd;

  const Index slices = assignment.num_slices();
  mom.slice_means = MatrixXd::Zero(slices, data.p());
  std::vector<Index> counts(static_cast<std::size_t>(slices), 0);
  for (Index i = 0; i < n; ++i) {
    const Index label = assignment.labels[i];
    mom.slice_means.row(label) += data.x().row(i);
    ++counts[label];
  }
  mom.proportions.resize(slices);
  MatrixXd weighted(slices, data.p());
  for (Index j = 0; j < slices; ++j) {
    mom.proportions(j) = static_cast<double>(counts[j]) / nd;
    if (counts[j] > 0) mom.slice_means.row(j) /= static_cast<double>(counts[j]);
    weighted.row(j) = std::sqrt(mom.proportions(j)) * (mom.slice_means.row(j) - mom.x_bar.transpose());
    if (counts[j] == 0) weighted.row(j).setZero();
  }
  mom.gamma_hat = symmetrized(weighted.transpose() * weighted);
  return mom;
}

DesignMoments sliced_moments(const Dataset& data, Index num_slices) {
  const SliceAssignment assignment = make_slices(data.y(), num_slices);
  return compute_moments(data, indicator_basis(assignment), assignment);
}

MatrixXd w_inverse_indicator(const VectorXd& proportions) {
  const Index slices = proportions.size();
  if (slices < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 slice proportions");
  if ((proportions.array() <= 0.0).any()) {
    throw Error(ErrorCode::DegenerateSlice, "slice proportions must all be positive");
  }
  if (std::abs(proportions.sum() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "slice proportions must sum to 1");
  }
  const Index h = slices - 1;
  MatrixXd inv = MatrixXd::Constant(h, h, 1.0 / proportions(h));
  inv.diagonal().array() += proportions.head(h).array().inverse();
  return inv;
}

MatrixXd signal_matrix(const DesignMoments& moments) {
  Eigen::LLT<MatrixXd> llt(moments.w);
  if (moments.h() == 0 || llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw Error(ErrorCode::SingularBasisCovariance, "basis covariance W is singular");
  }
  const MatrixXd w_inv_m = llt.solve(moments.m);
  return symmetrized(moments.m.transpose() * w_inv_m);
}

}  // namespace grsir
