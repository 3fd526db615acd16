#include "grsir/estimator.hpp"

#include "grsir/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace grsir {

namespace {

constexpr double kNoSignal = 1e-12;
constexpr double kRankTolerance = 1e-12;

struct PencilSolution {
  VectorXd values;
  MatrixXd vectors;
  bool degenerate_gap = false;
};

// Top-k solutions of a x = lambda b x for symmetric a and the Cholesky
// factor of symmetric positive definite b.
PencilSolution solve_pencil(const MatrixXd& a, const Eigen::LLT<MatrixXd>& b_llt, Index k) {
  const auto lower = b_llt.matrixL();
  const MatrixXd half = lower.solve(a);
  MatrixXd reduced = lower.solve(half.transpose());
  reduced = 0.5 * (reduced + reduced.transpose());

  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(reduced);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::CholeskyFailure, "reduced eigenproblem did not converge");
  }
  const Index dim = reduced.rows();
  const VectorXd all = solver.eigenvalues().reverse();

  PencilSolution out;
  out.values = all.head(k);
  for (Index j = 0; j < k; ++j) {
    if (out.values(j) < 0.0 && out.values(j) > -1e-12) out.values(j) = 0.0;
  }
  const MatrixXd top = solver.eigenvectors().rightCols(k).rowwise().reverse();
  out.vectors = b_llt.matrixU().solve(top);
  if (k < dim && std::abs(all(k - 1) - all(k)) < 1e-10 * std::abs(all(0))) {
    out.degenerate_gap = true;
  }
  return out;
}

MatrixXd normalized_directions(const MatrixXd& raw) {
  MatrixXd out(raw.rows(), raw.cols());
  for (Index j = 0; j < raw.cols(); ++j) {
    VectorXd v = raw.col(j).normalized();
    apply_sign_convention(v);
    out.col(j) = v;
  }
  return out;
}

void check_k(Index k, Index limit, const char* what) {
  if (k < 1 || k > limit) {
    throw Error(ErrorCode::InvalidArgument,
                "number of directions must lie in [1, " + std::to_string(limit) + "] (" + what +
                    ")");
  }
}

double objective_with_penalty(const VectorXd& mu, const MatrixXd& v, const VectorXd& b,
                              const VectorXd& c, const DesignMoments& mom,
                              double b_omega_inv_b) {
  const Index p = mom.p();
  if (mu.size() != p || v.rows() != p || v.cols() != p || b.size() != p || c.size() != mom.h()) {
    throw Error(ErrorCode::DimensionMismatch, "objective arguments do not match the moments");
  }
  if (b.squaredNorm() == 0.0) throw Error(ErrorCode::InvalidArgument, "direction b must be nonzero");
  Eigen::LLT<MatrixXd> llt(v);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    throw Error(ErrorCode::NonPositiveDefinite, "V is not positive definite");
  }
  const MatrixXd lower = llt.matrixL();
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  const double trace_term = llt.solve(mom.sigma_hat).trace();
  const VectorXd vb = v * b;
  const VectorXd r = mu - mom.x_bar + mom.s_bar.dot(c) * vb;
  const double location = r.dot(llt.solve(r));
  const double cwc = c.dot(mom.w * c);
  const double bvb = b.dot(vb);
  double g = log_det + trace_term + location + cwc * bvb - 2.0 * c.dot(mom.m * b);
  if (b_omega_inv_b != 0.0) {
    if (std::isinf(b_omega_inv_b)) return std::numeric_limits<double>::infinity();
    g += b_omega_inv_b * bvb * cwc / b.dot(mom.sigma_hat * b);
  }
  return g;
}

// Closed-form remaining parameters for the leading direction.
FitResult finish_fit(const DesignMoments& mom, const DirectionSolution& sol,
                     const PriorMaterialization* prior) {
  FitResult fit;
  fit.directions = sol.directions;
  fit.eigenvalues = sol.eigenvalues;
  fit.degenerate_gap = sol.degenerate_gap;

  const VectorXd b = fit.leading_direction();
  const double lambda = fit.leading_eigenvalue();
  const VectorXd sigma_b = mom.sigma_hat * b;
  const double b_sigma_b = b.dot(sigma_b);
  const double b_omega_inv_b = prior != nullptr ? omega_inverse_quadratic(*prior, b) : 0.0;

  MatrixXd v_hat = mom.sigma_hat - (lambda / b_sigma_b) * sigma_b * sigma_b.transpose();
  v_hat = 0.5 * (v_hat + v_hat.transpose());
  const double b_v_b = b.dot(v_hat * b);

  fit.theta_b = b_v_b / b_sigma_b;
  fit.eta_b = b_omega_inv_b / b_sigma_b;
  fit.rho_hat = snr_estimate(lambda);

  if (fit.k() == 1) {
    Eigen::LLT<MatrixXd> w_llt(mom.w);
    IndexParameters params;
    params.c_hat = w_llt.solve(mom.m * b) / ((1.0 + fit.eta_b) * b_v_b);
    params.mu_hat = mom.x_bar - mom.s_bar.dot(params.c_hat) * (v_hat * b);
    params.v_hat = v_hat;
    try {
      fit.objective =
          objective_with_penalty(params.mu_hat, params.v_hat, b, params.c_hat, mom, b_omega_inv_b);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonPositiveDefinite) throw;
    }
    fit.parameters = std::move(params);
  }
  return fit;
}

void check_signal(const DirectionSolution& sol) {
  if (!(sol.eigenvalues(0) >= kNoSignal)) {
    throw Error(ErrorCode::NoSignal, "leading eigenvalue " + std::to_string(sol.eigenvalues(0)) +
                                         " is below 1e-12: no between-slice signal");
  }
}

}  // namespace

void apply_sign_convention(VectorXd& v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

double snr_estimate(double lambda_hat) {
  if (!(lambda_hat >= 0.0 && lambda_hat < 1.0)) {
    throw Error(ErrorCode::OutOfRange,
                "eigenvalue " + std::to_string(lambda_hat) + " outside [0, 1)");
  }
  return lambda_hat / (1.0 - lambda_hat);
}

DirectionSolution solve_projected_problem(const ProjectedProblem& projected,
                                          const MatrixXd& basis, Index k) {
  const Index d = projected.gamma.rows();
  if (k > d) {
    throw Error(ErrorCode::SubspaceTooSmall,
                std::to_string(k) + " directions requested but the prior retains only " +
                    std::to_string(d));
  }
  check_k(k, d, "prior subspace");
  MatrixXd pencil = projected.sigma;
  pencil.diagonal() += projected.omega_inv;
  Eigen::LLT<MatrixXd> llt(pencil);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::CholeskyFailure,
                "projected Sigma + Omega^-1 is not positive definite; check d and tau");
  }
  const PencilSolution sol = solve_pencil(projected.gamma, llt, k);
  DirectionSolution out;
  out.eigenvalues = sol.values;
  out.directions = normalized_directions(basis * sol.vectors);
  out.degenerate_gap = sol.degenerate_gap;
  return out;
}

DirectionSolution solve_direction_problem(const MatrixXd& gamma_hat, const MatrixXd& sigma_hat,
                                          const PriorMaterialization& prior, Index k) {
  return solve_projected_problem(project_problem(prior, gamma_hat, sigma_hat), prior.basis, k);
}

FitResult fit_sir(const DesignMoments& moments, Index k) {
  check_k(k, std::min(moments.h(), moments.p()), "min(h, p)");
  const MatrixXd signal = signal_matrix(moments);
  Eigen::LLT<MatrixXd> llt(moments.sigma_hat);
  if (llt.info() != Eigen::Success || llt.rcond() < kRankTolerance) {
    throw Error(ErrorCode::SingularCovariance,
                "predictor covariance is singular or has condition number above 1e12; "
                "use a regularized prior");
  }
  const PencilSolution pencil = solve_pencil(signal, llt, k);
  DirectionSolution sol;
  sol.eigenvalues = pencil.values;
  sol.directions = normalized_directions(pencil.vectors);
  sol.degenerate_gap = pencil.degenerate_gap;
  check_signal(sol);
  return finish_fit(moments, sol, nullptr);
}

FitResult fit_grsir(const DesignMoments& moments, const PriorMaterialization& prior, Index k) {
  if (prior.p() != moments.p()) {
    throw Error(ErrorCode::DimensionMismatch, "prior dimension does not match the moments");
  }
  if (k > prior.d()) {
    throw Error(ErrorCode::SubspaceTooSmall,
                std::to_string(k) + " directions requested but the prior retains only " +
                    std::to_string(prior.d()));
  }
  check_k(k, std::min(moments.h(), prior.d()), "min(h, d)");
  const MatrixXd signal = signal_matrix(moments);
  const DirectionSolution sol = solve_direction_problem(signal, moments.sigma_hat, prior, k);
  check_signal(sol);
  return finish_fit(moments, sol, &prior);
}

double objective_g(const VectorXd& mu, const MatrixXd& v, const VectorXd& b, const VectorXd& c,
                   const DesignMoments& moments) {
  return objective_with_penalty(mu, v, b, c, moments, 0.0);
}

double objective_g_omega(const VectorXd& mu, const MatrixXd& v, const VectorXd& b,
                         const VectorXd& c, const DesignMoments& moments,
                         const PriorMaterialization& prior) {
  return objective_with_penalty(mu, v, b, c, moments, omega_inverse_quadratic(prior, b));
}

}  // namespace grsir
