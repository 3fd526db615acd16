#include "grsir/simulation.hpp"

#include "grsir/csv.hpp"
#include "grsir/error.hpp"
#include "grsir/estimator.hpp"
#include "grsir/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <thread>

namespace grsir {

MatrixXd random_orthogonal(Index p, std::uint64_t seed) {
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  CounterRng rng(seed, StreamPurpose::Orthogonal);
  MatrixXd gaussian(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) gaussian(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<MatrixXd> qr(gaussian);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(p, p);
  const MatrixXd& r = qr.matrixQR();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Population make_population(Index p, double theta, const MatrixXd& q) {
  if (p < 5) throw Error(ErrorCode::DimensionTooSmall, "the true index needs p >= 5");
  if (q.rows() != p || q.cols() != p) {
    throw Error(ErrorCode::DimensionMismatch, "rotation does not match the dimension");
  }
  Population pop;
  pop.eigenvalues.resize(p);
  for (Index j = 0; j < p; ++j) pop.eigenvalues(j) = std::pow(static_cast<double>(p - j), theta);
  const MatrixXd sigma = q * pop.eigenvalues.asDiagonal() * q.transpose();
  pop.sigma = 0.5 * (sigma + sigma.transpose());
  pop.beta = q.leftCols(5).rowwise().sum() / std::sqrt(5.0);
  pop.projection_sd = std::sqrt(pop.beta.dot(pop.sigma * pop.beta));
  return pop;
}

MatrixXd sample_predictors(Index n, const MatrixXd& sigma, std::uint64_t seed,
                           std::uint32_t stream) {
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NonPositiveDefinite, "population covariance is not positive definite");
  }
  const Index p = sigma.rows();
  CounterRng rng(seed, StreamPurpose::Predictors, stream);
  MatrixXd z(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  }
  return z * llt.matrixU();
}

VectorXd model_response(int model_id, const MatrixXd& x, const Population& population,
                        double noise_sd, std::uint64_t seed, std::uint32_t stream) {
  if (model_id != 1 && model_id != 2) {
    throw Error(ErrorCode::InvalidArgument, "model must be 1 or 2");
  }
  if (!(population.projection_sd > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "projection standard deviation must be positive");
  }
  const double s = population.projection_sd;
  const VectorXd index = x * population.beta;
  VectorXd y(x.rows());
  for (Index i = 0; i < y.size(); ++i) {
    y(i) = model_id == 1 ? std::sin(std::numbers::pi / (2.0 * s) * index(i))
                         : std::abs(index(i) / s - 0.5);
  }
  if (noise_sd > 0.0) {
    CounterRng rng(seed, StreamPurpose::Noise, stream);
    for (Index i = 0; i < y.size(); ++i) y(i) += noise_sd * rng.normal();
  }
  return y;
}

Dataset sample_model(int model_id, Index n, const Population& population, double noise_sd,
                     std::uint64_t seed) {
  MatrixXd x = sample_predictors(n, population.sigma, seed);
  VectorXd y = model_response(model_id, x, population, noise_sd, seed);
  return Dataset(std::move(x), std::move(y));
}

namespace {

MatrixXd unit_columns(const MatrixXd& directions) {
  MatrixXd out = directions;
  for (Index j = 0; j < out.cols(); ++j) out.col(j).normalize();
  return out;
}

}  // namespace

double msc(const MatrixXd& directions, const VectorXd& beta) {
  if (directions.cols() < 1) throw Error(ErrorCode::InvalidArgument, "MSC needs at least one direction");
  const VectorXd cosines = unit_columns(directions).transpose() * beta.normalized();
  return cosines.squaredNorm() / static_cast<double>(cosines.size());
}

double vsc(const MatrixXd& directions) {
  const Index count = directions.cols();
  if (count < 2) throw Error(ErrorCode::InvalidArgument, "VSC needs at least two directions");
  const MatrixXd unit = unit_columns(directions);
  const MatrixXd gram = unit.transpose() * unit;
  const double off_diagonal = gram.squaredNorm() - gram.diagonal().squaredNorm();
  return off_diagonal / static_cast<double>(count * (count - 1));
}

std::string_view to_string(LogBase base) { return base == LogBase::Natural ? "e" : "10"; }

std::vector<double> tau_grid(Index count, double log_min, double log_max, LogBase base) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "tau grid needs at least one value");
  std::vector<double> out;
  const double step = count > 1 ? (log_max - log_min) / static_cast<double>(count - 1) : 0.0;
  for (Index i = 0; i < count; ++i) {
    const double exponent = log_min + step * static_cast<double>(i);
    out.push_back(base == LogBase::Natural ? std::exp(exponent) : std::pow(10.0, exponent));
  }
  return out;
}

std::vector<double> ScenarioConfig::taus() const {
  if (!tau_grid_override.empty()) return tau_grid_override;
  return tau_grid(tau_count, log_tau_min, log_tau_max, log_base);
}

void ScenarioConfig::validate(int experiment) const {
  auto fail = [](const std::string& message) { throw Error(ErrorCode::InvalidArgument, message); };
  if (experiment < 1 || experiment > 3) fail("experiment must be 1, 2 or 3");
  if (p < 5) fail("p must be at least 5");
  if (num_slices < 2) fail("need at least 2 slices");
  if (n < num_slices) fail("n must be at least the number of slices");
  if (replicates < 2) fail("need at least 2 replicates for VSC");
  if (model_id != 1 && model_id != 2) fail("model must be 1 or 2");
  if (!(noise_sd >= 0.0)) fail("noise sd must be non-negative");
  if (!(theta >= 0.0)) fail("theta must be non-negative");
  for (double t : theta_grid) {
    if (!(t >= 0.0)) fail("theta grid values must be non-negative");
  }
  if (methods.empty()) fail("no methods selected");
  if (cutoff < 1) fail("cut-off d must be positive");
  for (Index d : d_grid) {
    if (d < 1 || d > p) fail("d grid values must lie in [1, p]");
  }
  const auto grid = taus();
  if (grid.empty()) fail("tau grid is empty");
  for (double t : grid) {
    if (!(t > 0.0 && std::isfinite(t))) fail("tau grid values must be positive and finite");
  }
}

namespace {

struct Scenario {
  VectorXd beta;
  // One entry when replicates share X, otherwise one per replicate.
  std::vector<SpectralDecomposition> spectra;
  std::vector<MatrixXd> rotated_sigma;
  // Per replicate, in the eigenbasis of its spectrum; empty when slicing failed.
  std::vector<std::optional<MatrixXd>> rotated_gamma;
  Index p = 0;

  std::size_t spectrum_of(std::size_t replicate) const {
    return spectra.size() == 1 ? 0 : replicate;
  }
};

MatrixXd rotate(const MatrixXd& m, const MatrixXd& q) {
  const MatrixXd r = q.transpose() * m * q;
  return 0.5 * (r + r.transpose());
}

Scenario build_scenario(const ScenarioConfig& cfg, double theta, const MatrixXd& q) {
  const Population pop = make_population(cfg.p, theta, q);
  Scenario sc;
  sc.beta = pop.beta;
  sc.p = cfg.p;
  const auto replicates = static_cast<std::size_t>(cfg.replicates);

  std::optional<MatrixXd> shared_x;
  if (!cfg.independent_replicates) shared_x = sample_predictors(cfg.n, pop.sigma, cfg.seed, 0);

  for (std::size_t r = 0; r < replicates; ++r) {
    const auto stream = static_cast<std::uint32_t>(r);
    MatrixXd x = shared_x ? *shared_x : sample_predictors(cfg.n, pop.sigma, cfg.seed, stream + 1);
    VectorXd y = model_response(cfg.model_id, x, pop, cfg.noise_sd, cfg.seed, stream);
    const Dataset data(std::move(x), std::move(y));

    std::optional<DesignMoments> mom;
    try {
      mom = sliced_moments(data, cfg.num_slices);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateResponse) throw;
    }
    if (r == 0 || !shared_x) {
      // Sigma-hat depends on X only; the slicing outcome does not matter.
      const MatrixXd xc = data.x().rowwise() - data.x().colwise().mean();
      MatrixXd sigma_hat = xc.transpose() * xc / static_cast<double>(cfg.n);
      sigma_hat = 0.5 * (sigma_hat + sigma_hat.transpose());
      sc.spectra.push_back(spectral_decompose(sigma_hat));
      sc.rotated_sigma.push_back(rotate(sigma_hat, sc.spectra.back().vectors));
    }
    if (mom) {
      sc.rotated_gamma.emplace_back(rotate(mom->gamma_hat, sc.spectra[sc.spectrum_of(r)].vectors));
    } else {
      sc.rotated_gamma.emplace_back(std::nullopt);
    }
  }
  return sc;
}

PriorSpec spec_for(PriorKind kind, double tau, Index d) {
  switch (kind) {
    case PriorKind::Sir: return PriorSpec::sir(tau);
    case PriorKind::Ridge: return PriorSpec::ridge(tau);
    case PriorKind::PcaSir: return PriorSpec::pca_sir(d, tau);
    case PriorKind::Tikhonov: return PriorSpec::tikhonov(tau);
    case PriorKind::PcaRidge: return PriorSpec::pca_ridge(d, tau);
    case PriorKind::PcaTikhonov: return PriorSpec::pca_tikhonov(d, tau);
    case PriorKind::Spectral: break;
  }
  throw Error(ErrorCode::InvalidArgument, "spectral priors are not part of the experiments");
}

struct Cell {
  PriorKind method;
  double tau;
  Index d;
};

CriterionRow evaluate_cell(const Scenario& sc, const Cell& cell, double theta) {
  CriterionRow row;
  row.method = cell.method;
  row.tau = cell.tau;
  row.theta = theta;
  row.d = is_subspace_prior(cell.method) ? cell.d : sc.p;

  const PriorSpec spec = spec_for(cell.method, cell.tau, cell.d);
  std::vector<std::optional<PriorMaterialization>> priors(sc.spectra.size());
  std::vector<bool> prior_failed(sc.spectra.size(), false);

  MatrixXd directions(sc.p, static_cast<Index>(sc.rotated_gamma.size()));
  Index used = 0;
  double lambda_sum = 0.0;
  for (std::size_t r = 0; r < sc.rotated_gamma.size(); ++r) {
    const std::size_t s = sc.spectrum_of(r);
    if (!sc.rotated_gamma[r]) {
      ++row.failures;
      continue;
    }
    try {
      if (!priors[s] && !prior_failed[s]) priors[s] = materialize(spec, sc.spectra[s]);
    } catch (const Error& e) {
      if (!is_numerical(e.code())) throw;
      prior_failed[s] = true;
    }
    if (prior_failed[s]) {
      ++row.failures;
      continue;
    }
    const PriorMaterialization& prior = *priors[s];
    const Index d = prior.d();
    ProjectedProblem projected{sc.rotated_gamma[r]->topLeftCorner(d, d),
                               sc.rotated_sigma[s].topLeftCorner(d, d), prior.omega_inv};
    try {
      const DirectionSolution sol = solve_projected_problem(projected, prior.basis, 1);
      directions.col(used++) = sol.directions.col(0);
      lambda_sum += sol.eigenvalues(0);
    } catch (const Error& e) {
      if (!is_numerical(e.code())) throw;
      ++row.failures;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const MatrixXd fitted = directions.leftCols(used);
  row.msc = used >= 1 ? msc(fitted, sc.beta) : nan;
  row.vsc = used >= 2 ? vsc(fitted) : nan;
  row.mean_lambda = used >= 1 ? lambda_sum / static_cast<double>(used) : nan;
  return row;
}

std::vector<CriterionRow> evaluate_cells(const Scenario& sc, const std::vector<Cell>& cells,
                                         double theta, unsigned threads) {
  std::vector<CriterionRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      rows[i] = evaluate_cell(sc, cells[i], theta);
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  if (count == 1) {
    worker();
    return rows;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      try {
        worker();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

bool better(const CriterionRow& a, const CriterionRow& b) {
  if (std::isnan(b.msc)) return !std::isnan(a.msc);
  return a.msc > b.msc;
}

// Best-MSC row among rows sharing (method, d); first tau wins ties.
std::vector<CriterionRow> best_over_tau(const std::vector<CriterionRow>& rows) {
  std::map<std::pair<int, Index>, CriterionRow> best;
  for (const auto& row : rows) {
    const auto key = std::make_pair(static_cast<int>(row.method), row.d);
    const auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(key, row);
    } else if (better(row, it->second)) {
      it->second = row;
    }
  }
  std::vector<CriterionRow> out;
  for (const auto& [key, row] : best) out.push_back(row);
  return out;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

CriterionReport run_experiment(int experiment, const ScenarioConfig& config) {
  config.validate(experiment);
  const auto start = std::chrono::steady_clock::now();
  const unsigned threads = resolve_threads(config.threads);
  const std::vector<double> taus = config.taus();
  const Index fixed_d = std::min(config.cutoff, config.p);
  const MatrixXd q = random_orthogonal(config.p, config.seed);

  CriterionReport report;
  report.experiment = experiment;
  report.config = config;

  auto cells_for = [&](const std::vector<Index>& ds, bool once_for_full_rank) {
    std::vector<Cell> cells;
    for (PriorKind method : config.methods) {
      const bool uses_d = is_subspace_prior(method);
      const std::vector<Index> method_ds =
          uses_d ? ds : (once_for_full_rank ? std::vector<Index>{config.p} : std::vector<Index>{ds.front()});
      for (Index d : method_ds) {
        for (double tau : taus) cells.push_back({method, tau, d});
      }
    }
    return cells;
  };

  if (experiment == 1) {
    const Scenario sc = build_scenario(config, config.theta, q);
    report.rows = evaluate_cells(sc, cells_for({fixed_d}, false), config.theta, threads);
  } else if (experiment == 2) {
    std::vector<double> thetas = config.theta_grid;
    if (thetas.empty()) {
      for (int i = 0; i <= 30; ++i) thetas.push_back(0.1 * i);
    }
    for (double theta : thetas) {
      const Scenario sc = build_scenario(config, theta, q);
      const auto rows = evaluate_cells(sc, cells_for({fixed_d}, false), theta, threads);
      const auto best = best_over_tau(rows);
      report.rows.insert(report.rows.end(), best.begin(), best.end());
    }
  } else {
    std::vector<Index> ds = config.d_grid;
    if (ds.empty()) {
      for (Index d = 1; d <= config.p; ++d) ds.push_back(d);
    }
    const Scenario sc = build_scenario(config, config.theta, q);
    report.rows = best_over_tau(evaluate_cells(sc, cells_for(ds, true), config.theta, threads));
  }

  std::stable_sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
    if (a.method != b.method) return static_cast<int>(a.method) < static_cast<int>(b.method);
    if (a.theta != b.theta) return a.theta < b.theta;
    if (a.d != b.d) return a.d < b.d;
    return a.tau < b.tau;
  });
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report_csv(std::ostream& out, const CriterionReport& report) {
  const ScenarioConfig& cfg = report.config;
  out << "experiment,method,tau,theta,d,h,N,msc,vsc,mean_lambda,failures,seed\n";
  for (const auto& row : report.rows) {
    out << report.experiment << ',' << to_string(row.method) << ',' << format_double(row.tau)
        << ',' << format_double(row.theta) << ',' << row.d << ',' << cfg.num_slices - 1 << ','
        << cfg.replicates << ',' << format_double(row.msc) << ',' << format_double(row.vsc)
        << ',' << format_double(row.mean_lambda) << ',' << row.failures << ',' << cfg.seed
        << '\n';
  }
}

std::vector<CriterionRow> best_rows_per_method(const CriterionReport& report) {
  std::vector<CriterionRow> out;
  for (PriorKind method : report.config.methods) {
    std::optional<CriterionRow> best;
    for (const auto& row : report.rows) {
      if (row.method == method && (!best || better(row, *best))) best = row;
    }
    if (best) out.push_back(*best);
  }
  return out;
}

}  // namespace grsir
