#pragma once

// Synthetic single-index models with a controlled covariance condition
// number, the squared-cosine quality criteria, and the three comparison
// experiments (tau sweep, condition-number sweep, cut-off sweep).

#include "grsir/design.hpp"
#include "grsir/priors.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace grsir {

/// p x p orthogonal matrix from the QR factorization of a Gaussian matrix,
/// with signs fixed so R has a positive diagonal. Deterministic per seed.
MatrixXd random_orthogonal(Index p, std::uint64_t seed);

struct Population {
  MatrixXd sigma;        // Q diag(p^theta, ..., 1^theta) Q^t
  VectorXd beta;         // 5^-1/2 Q (1,1,1,1,1,0,...,0)^t
  VectorXd eigenvalues;  // p^theta, ..., 1^theta
  double projection_sd = 0.0;  // (beta^t Sigma beta)^1/2
};

/// Throws DimensionTooSmall for p < 5.
Population make_population(Index p, double theta, const MatrixXd& q);

/// n draws of N(0, sigma) through the Cholesky factor of sigma.
MatrixXd sample_predictors(Index n, const MatrixXd& sigma, std::uint64_t seed,
                           std::uint32_t stream = 0);

/// Model 1: sin(pi / (2 s) beta^t x) + eps;  Model 2: |beta^t x / s - 1/2| + eps,
/// s = projection_sd, eps ~ N(0, noise_sd^2) from the noise stream.
VectorXd model_response(int model_id, const MatrixXd& x, const Population& population,
                        double noise_sd, std::uint64_t seed, std::uint32_t stream = 0);

Dataset sample_model(int model_id, Index n, const Population& population, double noise_sd,
                     std::uint64_t seed);

/// Mean over replicates of (beta^t b_r)^2. Columns are normalized first.
double msc(const MatrixXd& directions, const VectorXd& beta);
/// Mean over ordered pairs r != s of (b_s^t b_r)^2. Needs at least 2 columns.
double vsc(const MatrixXd& directions);

enum class LogBase { Natural, Ten };
std::string_view to_string(LogBase base);

/// count values of log(tau) evenly spaced on [log_min, log_max].
std::vector<double> tau_grid(Index count, double log_min, double log_max, LogBase base);

struct ScenarioConfig {
  Index n = 100;
  Index p = 50;
  double theta = 2.0;                // experiments 1 and 3
  std::vector<double> theta_grid;    // experiment 2
  int model_id = 1;
  double noise_sd = 0.03;
  Index replicates = 100;
  std::uint64_t seed = 1;
  Index num_slices = 10;             // h + 1
  Index tau_count = 150;
  double log_tau_min = -5.0;
  double log_tau_max = 25.0;
  LogBase log_base = LogBase::Natural;
  std::vector<double> tau_grid_override;  // used instead of the log grid when non-empty
  Index cutoff = 20;                 // d for experiments 1 and 2 (clipped to p)
  std::vector<Index> d_grid;         // experiment 3; 1..p when empty
  std::vector<PriorKind> methods = {PriorKind::Sir,      PriorKind::Ridge,
                                    PriorKind::PcaSir,   PriorKind::Tikhonov,
                                    PriorKind::PcaRidge, PriorKind::PcaTikhonov};
  /// Redraw X for every replicate instead of reusing one X sample.
  bool independent_replicates = false;
  unsigned threads = 1;

  std::vector<double> taus() const;
  /// Throws InvalidArgument on an unusable configuration.
  void validate(int experiment) const;
};

struct CriterionRow {
  PriorKind method = PriorKind::Sir;
  double tau = 0.0;
  double theta = 0.0;
  Index d = 0;
  double msc = 0.0;
  double vsc = 0.0;
  double mean_lambda = 0.0;
  Index failures = 0;
};

struct CriterionReport {
  int experiment = 1;
  ScenarioConfig config;
  std::vector<CriterionRow> rows;
  double runtime_seconds = 0.0;
};

/// Experiment 1 sweeps tau at fixed theta and d; 2 sweeps theta with each
/// method at its best-MSC tau; 3 sweeps d with best-MSC tau. Methods without
/// a cut-off are reported once in experiment 3, at d = p. Failed fits are
/// counted per row and excluded from the criteria.
CriterionReport run_experiment(int experiment, const ScenarioConfig& config);

void write_report_csv(std::ostream& out, const CriterionReport& report);

/// Highest-MSC row per method, in method order.
std::vector<CriterionRow> best_rows_per_method(const CriterionReport& report);

}  // namespace grsir
