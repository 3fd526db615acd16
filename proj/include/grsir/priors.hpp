#pragma once

// Prior covariance Omega for the regularized estimator. Every built-in prior
// shares eigenvectors with Sigma-hat, so Omega is carried as a retained
// eigenbasis plus one weight per retained eigenvector:
//
//   Omega = sum_j phi(lambda_j) q_j q_j^t,  j = 1..d
//
// and is never formed densely by the solver.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grsir {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class PriorKind { Sir, Ridge, PcaSir, Tikhonov, PcaRidge, PcaTikhonov, Spectral };

std::string_view to_string(PriorKind kind);
/// Accepts the CLI spellings: sir, ridge, pca-sir, tikhonov, pca-ridge,
/// pca-tikhonov, spectral.
std::optional<PriorKind> parse_prior_kind(std::string_view name);

/// True for the priors restricted to the top-d principal subspace.
bool is_subspace_prior(PriorKind kind);

/// d = ceil(p / 2).
Index default_cutoff(Index p);

struct PriorSpec {
  PriorKind kind = PriorKind::Ridge;
  double tau = 1.0;
  /// Cut-off dimension for the subspace priors; default_cutoff(p) if unset.
  std::optional<Index> cutoff;
  /// Spectral only: phi(lambda_1)..phi(lambda_d), d = size.
  std::vector<double> spectral_weights;

  static PriorSpec sir(double tau);
  static PriorSpec ridge(double tau);
  static PriorSpec pca_sir(Index d, double tau = 1.0);
  static PriorSpec tikhonov(double tau);
  static PriorSpec pca_ridge(Index d, double tau);
  static PriorSpec pca_tikhonov(Index d, double tau);
  static PriorSpec spectral(std::vector<double> weights);

  /// Throws InvalidArgument on tau <= 0, d < 1 or d > p, empty or
  /// non-positive spectral weights.
  void validate(Index p) const;
  std::string describe() const;
};

struct SpectralDecomposition {
  VectorXd values;   // descending
  MatrixXd vectors;  // columns match values
};

/// Symmetric eigendecomposition with eigenvalues sorted descending and tiny
/// negative values in [-1e-12, 0) clamped to zero.
/// Throws NotSymmetric when |A - A^t| exceeds 1e-10 (relative to max |A|).
SpectralDecomposition spectral_decompose(const MatrixXd& sigma_hat);

/// Eigenvalues at or below rank_tolerance(values) are treated as zero.
double rank_tolerance(const VectorXd& descending_values);

struct PriorMaterialization {
  PriorSpec spec;
  MatrixXd basis;        // p x d, retained eigenvectors
  VectorXd weights;      // phi(lambda_j), all > 0
  VectorXd omega_inv;    // 1 / phi(lambda_j)
  VectorXd eigenvalues;  // retained lambda_j, descending
  bool full_rank = false;

  Index p() const { return basis.rows(); }
  Index d() const { return basis.cols(); }
};

/// Throws SingularCovariance when an eigenvalue the prior needs is at or
/// below the rank tolerance. Tikhonov keeps only the numerically positive
/// part of the spectrum, which is exactly where Sigma-hat / tau is nonzero.
PriorMaterialization materialize(const PriorSpec& spec, const SpectralDecomposition& spectrum);
PriorMaterialization materialize(const PriorSpec& spec, const MatrixXd& sigma_hat);

/// Dense p x p Omega. For diagnostics and tests; the solver never needs it.
MatrixXd reconstruct_omega(const PriorMaterialization& prior);

/// b^t Omega^-1 b, with Omega^-1 taken on the retained subspace. Returns
/// +infinity when b has a component outside it (relative 1e-10).
double omega_inverse_quadratic(const PriorMaterialization& prior, const VectorXd& b);

struct ProjectedProblem {
  MatrixXd gamma;      // B^t Gamma B
  MatrixXd sigma;      // B^t Sigma B
  VectorXd omega_inv;  // diagonal of the projected Omega^-1
};

ProjectedProblem project_problem(const PriorMaterialization& prior, const MatrixXd& gamma_hat,
                                 const MatrixXd& sigma_hat);

}  // namespace grsir
