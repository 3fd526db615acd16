#include "grsir/priors.hpp"

#include "grsir/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace grsir {

std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::Sir: return "sir";
    case PriorKind::Ridge: return "ridge";
    case PriorKind::PcaSir: return "pca-sir";
    case PriorKind::Tikhonov: return "tikhonov";
    case PriorKind::PcaRidge: return "pca-ridge";
    case PriorKind::PcaTikhonov: return "pca-tikhonov";
    case PriorKind::Spectral: return "spectral";
  }
  return "unknown";
}

std::optional<PriorKind> parse_prior_kind(std::string_view name) {
  for (PriorKind kind : {PriorKind::Sir, PriorKind::Ridge, PriorKind::PcaSir, PriorKind::Tikhonov,
                         PriorKind::PcaRidge, PriorKind::PcaTikhonov, PriorKind::Spectral}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

bool is_subspace_prior(PriorKind kind) {
  return kind == PriorKind::PcaSir || kind == PriorKind::PcaRidge ||
         kind == PriorKind::PcaTikhonov || kind == PriorKind::Spectral;
}

Index default_cutoff(Index p) { return (p + 1) / 2; }

PriorSpec PriorSpec::sir(double tau) { return {PriorKind::Sir, tau, std::nullopt, {}}; }
PriorSpec PriorSpec::ridge(double tau) { return {PriorKind::Ridge, tau, std::nullopt, {}}; }
PriorSpec PriorSpec::pca_sir(Index d, double tau) { return {PriorKind::PcaSir, tau, d, {}}; }
PriorSpec PriorSpec::tikhonov(double tau) { return {PriorKind::Tikhonov, tau, std::nullopt, {}}; }
PriorSpec PriorSpec::pca_ridge(Index d, double tau) { return {PriorKind::PcaRidge, tau, d, {}}; }
PriorSpec PriorSpec::pca_tikhonov(Index d, double tau) {
  return {PriorKind::PcaTikhonov, tau, d, {}};
}
PriorSpec PriorSpec::spectral(std::vector<double> weights) {
  const auto d = static_cast<Index>(weights.size());
  return {PriorKind::Spectral, 1.0, d, std::move(weights)};
}

void PriorSpec::validate(Index p) const {
  if (kind != PriorKind::Spectral && !(tau > 0.0 && std::isfinite(tau))) {
    throw Error(ErrorCode::InvalidArgument, "tau must be a positive finite number");
  }
  if (kind == PriorKind::Spectral) {
    if (spectral_weights.empty()) {
      throw Error(ErrorCode::InvalidArgument, "spectral prior needs at least one weight");
    }
    for (double w : spectral_weights) {
      if (!(w > 0.0 && std::isfinite(w))) {
        throw Error(ErrorCode::InvalidArgument, "spectral weights must be positive and finite");
      }
    }
  }
  if (is_subspace_prior(kind)) {
    const Index d = kind == PriorKind::Spectral ? static_cast<Index>(spectral_weights.size())
                                                : cutoff.value_or(default_cutoff(p));
    if (d < 1 || d > p) {
      throw Error(ErrorCode::InvalidArgument,
                  "cut-off dimension d=" + std::to_string(d) + " outside [1, " +
                      std::to_string(p) + "]");
    }
  }
}

std::string PriorSpec::describe() const {
  std::ostringstream out;
  out << to_string(kind);
  if (kind != PriorKind::Spectral) out << "(tau=" << tau;
  if (is_subspace_prior(kind)) {
    out << (kind == PriorKind::Spectral ? "(" : ", ") << "d=";
    if (kind == PriorKind::Spectral) {
      out << spectral_weights.size();
    } else if (cutoff) {
      out << *cutoff;
    } else {
      out << "auto";
    }
  }
  out << ')';
  return out.str();
}

double rank_tolerance(const VectorXd& descending_values) {
  if (descending_values.size() == 0) return 0.0;
  return 1e-12 * std::max(descending_values(0), 0.0);
}

SpectralDecomposition spectral_decompose(const MatrixXd& sigma_hat) {
  if (sigma_hat.rows() != sigma_hat.cols() || sigma_hat.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "spectral_decompose needs a non-empty square matrix");
  }
  const double scale = std::max(1.0, sigma_hat.cwiseAbs().maxCoeff());
  if ((sigma_hat - sigma_hat.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");
  }
  const MatrixXd sym = 0.5 * (sigma_hat + sigma_hat.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NotSymmetric, "symmetric eigensolver did not converge");
  }
  SpectralDecomposition out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < out.values.size(); ++j) {
    if (out.values(j) < 0.0 && out.values(j) >= -1e-12) out.values(j) = 0.0;
  }
  return out;
}

PriorMaterialization materialize(const PriorSpec& spec, const SpectralDecomposition& spectrum) {
  const Index p = spectrum.values.size();
  spec.validate(p);
  const double eps = rank_tolerance(spectrum.values);

  Index numerical_rank = 0;
  while (numerical_rank < p && spectrum.values(numerical_rank) > eps) ++numerical_rank;

  auto require_positive = [&](Index count) {
    if (numerical_rank < count) {
      throw Error(ErrorCode::SingularCovariance,
                  "covariance has numerical rank " + std::to_string(numerical_rank) + " but " +
                      std::string(to_string(spec.kind)) + " needs " + std::to_string(count) +
                      " positive eigenvalues");
    }
  };

  Index d = p;
  switch (spec.kind) {
    case PriorKind::Sir:
      require_positive(p);
      break;
    case PriorKind::Ridge:
      break;
    case PriorKind::Tikhonov:
      require_positive(1);
      d = numerical_rank;
      break;
    case PriorKind::PcaSir:
    case PriorKind::PcaRidge:
    case PriorKind::PcaTikhonov:
      d = spec.cutoff.value_or(default_cutoff(p));
      require_positive(d);
      break;
    case PriorKind::Spectral:
      d = static_cast<Index>(spec.spectral_weights.size());
      require_positive(d);
      break;
  }

  PriorMaterialization out;
  out.spec = spec;
  if (is_subspace_prior(spec.kind)) out.spec.cutoff = d;
  out.basis = spectrum.vectors.leftCols(d);
  out.eigenvalues = spectrum.values.head(d);
  out.weights.resize(d);
  for (Index j = 0; j < d; ++j) {
    const double lambda = out.eigenvalues(j);
    switch (spec.kind) {
      case PriorKind::Sir:
      case PriorKind::PcaSir:
        out.weights(j) = 1.0 / (spec.tau * lambda);
        break;
      case PriorKind::Ridge:
      case PriorKind::PcaRidge:
        out.weights(j) = 1.0 / spec.tau;
        break;
      case PriorKind::Tikhonov:
      case PriorKind::PcaTikhonov:
        out.weights(j) = lambda / spec.tau;
        break;
      case PriorKind::Spectral:
        out.weights(j) = spec.spectral_weights[static_cast<std::size_t>(j)];
        break;
    }
  }
  out.omega_inv = out.weights.cwiseInverse();
  out.full_rank = d == p;
  return out;
}

PriorMaterialization materialize(const PriorSpec& spec, const MatrixXd& sigma_hat) {
  return materialize(spec, spectral_decompose(sigma_hat));
}

MatrixXd reconstruct_omega(const PriorMaterialization& prior) {
  return prior.basis * prior.weights.asDiagonal() * prior.basis.transpose();
}

double omega_inverse_quadratic(const PriorMaterialization& prior, const VectorXd& b) {
  const VectorXd coords = prior.basis.transpose() * b;
  if (!prior.full_rank) {
    const double outside = (b - prior.basis * coords).norm();
    if (outside > 1e-10 * b.norm()) return std::numeric_limits<double>::infinity();
  }
  return coords.cwiseAbs2().dot(prior.omega_inv);
}

ProjectedProblem project_problem(const PriorMaterialization& prior, const MatrixXd& gamma_hat,
                                 const MatrixXd& sigma_hat) {
  if (gamma_hat.rows() != prior.p() || sigma_hat.rows() != prior.p()) {
    throw Error(ErrorCode::DimensionMismatch, "moment matrices do not match the prior dimension");
  }
  const MatrixXd& basis = prior.basis;
  ProjectedProblem out;
  const MatrixXd g = basis.transpose() * gamma_hat * basis;
  const MatrixXd s = basis.transpose() * sigma_hat * basis;
  out.gamma = 0.5 * (g + g.transpose());
  out.sigma = 0.5 * (s + s.transpose());
  out.omega_inv = prior.omega_inv;
  return out;
}

}  // namespace grsir
