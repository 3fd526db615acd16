#pragma once

// Maximum-likelihood estimation of the single- and multi-index inverse
// regression model, with and without a Gaussian prior on the direction.
//
// Unregularized:  Gamma b = lambda Sigma b
// Regularized:    Omega Gamma b = lambda (Omega Sigma + I) b
//
// The regularized problem is solved inside the prior's retained subspace
// span(B) as the symmetric-definite pencil
//
//   B^t Gamma B v = lambda (B^t Sigma B + diag(1/phi)) v,   b = B v,
//
// which is equivalent for every prior whose eigenvectors are those of Sigma.

#include "grsir/design.hpp"
#include "grsir/priors.hpp"

#include <optional>

namespace grsir {

struct DirectionSolution {
  VectorXd eigenvalues;  // descending, in [0, 1)
  MatrixXd directions;   // p x K, unit columns, sign-normalized
  /// Set when the K-th and (K+1)-th eigenvalues are closer than
  /// 1e-10 * lambda_1, i.e. the retained block is not uniquely determined.
  bool degenerate_gap = false;
};

/// Solves the already projected pencil and lifts the solutions by `basis`
/// (p x d). Callers holding many priors over one eigenbasis project once.
DirectionSolution solve_projected_problem(const ProjectedProblem& projected,
                                          const MatrixXd& basis, Index k);

/// Top-K solutions of gamma b = lambda (sigma + Omega^-1) b on the prior's
/// subspace. Throws CholeskyFailure if the projected pencil is not positive
/// definite.
DirectionSolution solve_direction_problem(const MatrixXd& gamma_hat, const MatrixXd& sigma_hat,
                                          const PriorMaterialization& prior, Index k);

/// Coordinate coefficients, location and noise covariance of the fitted
/// single-index model.
struct IndexParameters {
  VectorXd c_hat;
  VectorXd mu_hat;
  MatrixXd v_hat;
};

struct FitResult {
  MatrixXd directions;
  VectorXd eigenvalues;
  /// Only for K = 1.
  std::optional<IndexParameters> parameters;
  // Diagnostics of the leading direction.
  double rho_hat = 0.0;
  double theta_b = 0.0;
  double eta_b = 0.0;
  /// G (or G_Omega) at the optimum; empty for K > 1 or when V-hat is not
  /// positive definite (singular Sigma-hat).
  std::optional<double> objective;
  bool degenerate_gap = false;

  Index k() const { return directions.cols(); }
  VectorXd leading_direction() const { return directions.col(0); }
  double leading_eigenvalue() const { return eigenvalues(0); }
};

/// Classical sliced inverse regression as the unregularized MLE.
/// Throws SingularCovariance (cond(Sigma-hat) >= 1e12),
/// SingularBasisCovariance, NoSignal (lambda_1 < 1e-12).
FitResult fit_sir(const DesignMoments& moments, Index k = 1);

/// Regularized estimator under the given prior.
/// Throws SubspaceTooSmall when k exceeds the prior's subspace dimension.
FitResult fit_grsir(const DesignMoments& moments, const PriorMaterialization& prior, Index k = 1);

/// Negative log-likelihood functional in closed form:
///   log det V + tr(Sigma V^-1) + r^t V^-1 r + (c^t W c)(b^t V b) - 2 c^t M b,
///   r = mu - x_bar + (s_bar^t c) V b.
/// Throws NonPositiveDefinite if V is not positive definite.
double objective_g(const VectorXd& mu, const MatrixXd& v, const VectorXd& b, const VectorXd& c,
                   const DesignMoments& moments);

/// objective_g plus (b^t Omega^-1 b)(b^t V b)(c^t W c) / (b^t Sigma-hat b).
/// +infinity when b leaves the prior's subspace.
double objective_g_omega(const VectorXd& mu, const MatrixXd& v, const VectorXd& b,
                         const VectorXd& c, const DesignMoments& moments,
                         const PriorMaterialization& prior);

/// lambda / (1 - lambda). Throws OutOfRange outside [0, 1).
double snr_estimate(double lambda_hat);

/// Flips v so its largest-magnitude coordinate is positive.
void apply_sign_convention(VectorXd& v);

}  // namespace grsir
