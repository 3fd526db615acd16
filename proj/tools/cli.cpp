#include "cli.hpp"

#include "grsir/artifact.hpp"
#include "grsir/csv.hpp"
#include "grsir/error.hpp"
#include "grsir/estimator.hpp"
#include "grsir/forward_link.hpp"
#include "grsir/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace grsir::cli {

namespace {

using nlohmann::json;

struct FitOptions {
  std::string data;
  std::string response = "y";
  std::string prior;
  double tau = 1.0;
  Index cutoff = 0;  // 0: default ceil(p/2)
  Index slices = 10;
  Index directions = 1;
  Index link_bins = 0;  // 0: default
  std::vector<double> tau_candidates;
  std::uint64_t seed = 0;
  std::string out;
};

struct PredictOptions {
  std::string model;
  std::string data;
  std::string out;
};

struct SimulateOptions {
  int model = 1;
  Index n = 100;
  Index p = 50;
  double theta = 2.0;
  double noise_sd = 0.03;
  std::uint64_t seed = 1;
  std::string out;
};

struct ExperimentOptions {
  int id = 1;
  ScenarioConfig config;
  std::vector<std::string> methods;
  std::string log_base = "e";
  unsigned threads = 0;
  std::string out;
};

std::string sidecar_path(const std::string& out) { return out + ".meta.json"; }

void write_json(const json& doc, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  file << doc.dump(2) << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  return file;
}

json invocation(int argc, const char* const* argv) {
  json args = json::array();
  for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
  return args;
}

PriorKind parse_prior_flag(const std::string& name) {
  const auto kind = parse_prior_kind(name);
  if (!kind || *kind == PriorKind::Spectral) {
    throw Error(ErrorCode::InvalidArgument,
                "--prior: unknown prior '" + name +
                    "' (expected sir, ridge, pca-sir, tikhonov, pca-ridge or pca-tikhonov)");
  }
  return *kind;
}

PriorSpec make_spec(PriorKind kind, double tau, Index cutoff) {
  PriorSpec spec;
  spec.kind = kind;
  spec.tau = tau;
  if (is_subspace_prior(kind) && cutoff > 0) spec.cutoff = cutoff;
  return spec;
}

double condition_number(const MatrixXd& sigma_hat) {
  const SpectralDecomposition spectrum = spectral_decompose(sigma_hat);
  const double smallest = spectrum.values(spectrum.values.size() - 1);
  if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
  return spectrum.values(0) / smallest;
}

unsigned worker_count(unsigned requested) {
  unsigned threads = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("GRSIR_THREADS")) {
    try {
      const long value = std::stol(cap);
      if (value >= 1) threads = std::min<unsigned>(threads, static_cast<unsigned>(value));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "GRSIR_THREADS must be a positive integer");
    }
  }
  return threads;
}

int cmd_fit(const FitOptions& opt, const json& args, std::ostream& out) {
  const PriorKind kind = parse_prior_flag(opt.prior);
  if (opt.tau <= 0.0) throw Error(ErrorCode::InvalidArgument, "--tau must be positive");
  if (opt.slices < 2) throw Error(ErrorCode::InvalidArgument, "--slices must be at least 2");

  const NamedDataset named = read_dataset_csv(opt.data, opt.response);
  const Dataset& data = named.data;
  if (opt.cutoff != 0 && (opt.cutoff < 1 || opt.cutoff > data.p())) {
    throw Error(ErrorCode::InvalidArgument, "--cutoff-d must lie in [1, " + std::to_string(data.p()) + "]");
  }
  const SliceAssignment slices = make_slices(data.y(), opt.slices);
  const DesignMoments mom = compute_moments(data, indicator_basis(slices), slices);
  const SpectralDecomposition spectrum = spectral_decompose(mom.sigma_hat);
  const Index bins = opt.link_bins > 0 ? opt.link_bins : default_link_bins(data.n());

  auto fit_with = [&](double tau) {
    if (kind == PriorKind::Sir) return fit_sir(mom, opt.directions);
    return fit_grsir(mom, materialize(make_spec(kind, tau, opt.cutoff), spectrum), opt.directions);
  };

  double tau = opt.tau;
  json selection = nullptr;
  if (!opt.tau_candidates.empty()) {
    const TauSelection chosen = select_tau_in_sample(
        opt.tau_candidates, data.x(), data.y(), mom.x_bar, bins,
        [&](double t) { return fit_with(t).leading_direction(); });
    tau = chosen.tau;
    selection = {{"candidates", opt.tau_candidates},
                 {"training_mse", chosen.mse_per_candidate},
                 {"selected_tau", chosen.tau},
                 {"note", "tau chosen by training-set MSE; the estimate is optimistic"}};
    out << "selected tau=" << format_double(tau)
        << " by in-sample MSE (optimistic; validate on held-out data)\n";
  }

  ModelArtifact artifact;
  artifact.fit = fit_with(tau);
  artifact.prior = make_spec(kind, tau, opt.cutoff);
  artifact.d = data.p();
  if (kind != PriorKind::Sir) {
    const PriorMaterialization prior = materialize(artifact.prior, spectrum);
    artifact.d = prior.d();
    artifact.prior = prior.spec;
  }
  artifact.h = mom.h();
  artifact.slice_boundaries = slices.boundaries;
  artifact.x_bar = mom.x_bar;
  artifact.seed = opt.seed;
  artifact.n = data.n();
  artifact.p = data.p();
  artifact.response = named.response_name;
  artifact.predictor_names = named.predictor_names;
  const VectorXd index = projected_index(artifact.fit.leading_direction(), mom.x_bar, data.x());
  artifact.link = fit_link(index, data.y(), bins);
  save_artifact(artifact, opt.out);

  json meta;
  meta["command"] = "fit";
  meta["arguments"] = args;
  meta["resolved"] = {{"data", opt.data},       {"response", opt.response},
                      {"prior", opt.prior},     {"tau", tau},
                      {"cutoff_d", artifact.d}, {"slices", opt.slices},
                      {"directions", opt.directions}, {"link_bins", bins},
                      {"seed", opt.seed},       {"out", opt.out}};
  meta["tau_selection"] = selection;
  write_json(meta, sidecar_path(opt.out));

  out << "lambda_hat=" << format_double(artifact.fit.leading_eigenvalue())
      << " rho_hat=" << format_double(artifact.fit.rho_hat)
      << " cond(Sigma_hat)=" << format_double(condition_number(mom.sigma_hat)) << '\n';
  return kExitOk;
}

int cmd_predict(const PredictOptions& opt, const json& args, std::ostream& out) {
  const ModelArtifact model = load_artifact(opt.model);
  if (!model.link) throw Error(ErrorCode::InvalidArgument, "model '" + opt.model + "' has no link");
  const NamedMatrix table = read_matrix_csv(opt.data, model.response);
  if (table.values.cols() != model.p) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimension mismatch: '" + opt.data + "' has " +
                    std::to_string(table.values.cols()) + " predictor columns, the model expects " +
                    std::to_string(model.p));
  }
  const VectorXd b = model.fit.leading_direction();
  const VectorXd index = projected_index(b, model.x_bar, table.values);
  const VectorXd predictions = (*model.link)(index);

  auto file = open_output(opt.out);
  file << "index,prediction\n";
  for (Index i = 0; i < predictions.size(); ++i) {
    file << format_double(index(i)) << ',' << format_double(predictions(i)) << '\n';
  }
  json meta;
  meta["command"] = "predict";
  meta["arguments"] = args;
  meta["resolved"] = {{"model", opt.model}, {"data", opt.data}, {"out", opt.out}};
  write_json(meta, sidecar_path(opt.out));
  out << "wrote " << predictions.size() << " predictions to " << opt.out << '\n';
  return kExitOk;
}

int cmd_simulate(const SimulateOptions& opt, const json& args, std::ostream& out) {
  if (opt.model != 1 && opt.model != 2) throw Error(ErrorCode::InvalidArgument, "--model must be 1 or 2");
  if (opt.theta < 0.0) throw Error(ErrorCode::InvalidArgument, "--theta must be non-negative");
  if (opt.noise_sd < 0.0) throw Error(ErrorCode::InvalidArgument, "--noise-sd must be non-negative");
  if (opt.n < 2) throw Error(ErrorCode::InvalidArgument, "--n must be at least 2");
  const Population pop = make_population(opt.p, opt.theta, random_orthogonal(opt.p, opt.seed));
  const Dataset data = sample_model(opt.model, opt.n, pop, opt.noise_sd, opt.seed);

  std::vector<std::string> names;
  for (Index j = 0; j < opt.p; ++j) names.push_back("x" + std::to_string(j + 1));
  auto file = open_output(opt.out);
  write_dataset_csv(file, data, names, "y");

  json meta;
  meta["command"] = "simulate";
  meta["arguments"] = args;
  meta["resolved"] = {{"model", opt.model}, {"n", opt.n},         {"p", opt.p},
                      {"theta", opt.theta}, {"noise_sd", opt.noise_sd}, {"seed", opt.seed},
                      {"out", opt.out}};
  meta["beta"] = std::vector<double>(pop.beta.data(), pop.beta.data() + pop.beta.size());
  meta["sigma"] = pop.projection_sd;
  write_json(meta, sidecar_path(opt.out));
  out << "wrote n=" << opt.n << " p=" << opt.p << " model " << opt.model << " sample to "
      << opt.out << '\n';
  return kExitOk;
}

int cmd_experiment(ExperimentOptions opt, const json& args, std::ostream& out) {
  ScenarioConfig& cfg = opt.config;
  if (opt.log_base == "e") {
    cfg.log_base = LogBase::Natural;
  } else if (opt.log_base == "10") {
    cfg.log_base = LogBase::Ten;
  } else {
    throw Error(ErrorCode::InvalidArgument, "--log-base must be 'e' or '10'");
  }
  if (!opt.methods.empty()) {
    cfg.methods.clear();
    for (const auto& name : opt.methods) cfg.methods.push_back(parse_prior_flag(name));
  }
  cfg.threads = worker_count(opt.threads);
  const CriterionReport report = run_experiment(opt.id, cfg);

  {
    auto file = open_output(opt.out);
    write_report_csv(file, report);
  }
  json meta;
  meta["command"] = "experiment";
  meta["arguments"] = args;
  json methods = json::array();
  for (PriorKind m : cfg.methods) methods.push_back(std::string(to_string(m)));
  json d_grid = cfg.d_grid;
  meta["resolved"] = {{"experiment", opt.id},
                      {"model", cfg.model_id},
                      {"n", cfg.n},
                      {"p", cfg.p},
                      {"theta", cfg.theta},
                      {"theta_grid", cfg.theta_grid},
                      {"noise_sd", cfg.noise_sd},
                      {"replicates", cfg.replicates},
                      {"seed", cfg.seed},
                      {"slices", cfg.num_slices},
                      {"tau_grid", cfg.taus()},
                      {"log_base", std::string(to_string(cfg.log_base))},
                      {"cutoff_d", cfg.cutoff},
                      {"d_grid", d_grid},
                      {"methods", methods},
                      {"independent_replicates", cfg.independent_replicates},
                      {"out", opt.out}};
  meta["best_tau_rule"] = "argmax of MSC over the tau grid";
  meta["threads"] = cfg.threads;
  meta["runtime_seconds"] = report.runtime_seconds;
  write_json(meta, sidecar_path(opt.out));

  for (const auto& row : best_rows_per_method(report)) {
    out << to_string(row.method) << ": best msc=" << format_double(row.msc)
        << " vsc=" << format_double(row.vsc) << " tau=" << format_double(row.tau)
        << " theta=" << format_double(row.theta) << " d=" << row.d
        << " failures=" << row.failures << '\n';
  }
  return kExitOk;
}

int cmd_priors(std::ostream& out) {
  out << "Built-in priors (Omega = sum_j phi(lambda_j) q_j q_j^t over eigenpairs of Sigma-hat):\n"
         "  sir           phi(l) = 1/(tau*l), all p directions   classical SIR for every tau > 0\n"
         "  ridge         phi(l) = 1/tau,     all p directions   Sigma-hat + tau*I\n"
         "  pca-sir       phi(l) = 1/(tau*l), top d directions   SIR after PCA; tau has no effect\n"
         "  tikhonov      phi(l) = l/tau,     all p directions   (Sigma-hat^2 + tau*I)^-1 Sigma-hat\n"
         "  pca-ridge     phi(l) = 1/tau,     top d directions   ridge on the top-d components\n"
         "  pca-tikhonov  phi(l) = l/tau,     top d directions   Tikhonov on the top-d components\n"
         "Defaults: --tau 1, --cutoff-d ceil(p/2).\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian-regularized sliced inverse regression", "grsir"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a direction and link on a CSV dataset");
  fit_cmd->add_option("--data", fit.data, "Input CSV with header")->required();
  fit_cmd->add_option("--response", fit.response, "Response column name")->capture_default_str();
  fit_cmd->add_option("--prior", fit.prior, "sir|ridge|pca-sir|tikhonov|pca-ridge|pca-tikhonov")
      ->required();
  fit_cmd->add_option("--tau", fit.tau, "Regularization parameter")->capture_default_str();
  fit_cmd->add_option("--cutoff-d", fit.cutoff, "Retained principal dimension (default ceil(p/2))");
  fit_cmd->add_option("--slices", fit.slices, "Number of response slices (h+1)")->capture_default_str();
  fit_cmd->add_option("--directions", fit.directions, "Number of directions K")->capture_default_str();
  fit_cmd->add_option("--link-bins", fit.link_bins, "Knots of the piecewise-linear link");
  fit_cmd->add_option("--tau-candidates", fit.tau_candidates,
                      "Select tau among these by training MSE (optimistic)")
      ->delimiter(',');
  fit_cmd->add_option("--seed", fit.seed, "Recorded in the model for provenance");
  fit_cmd->add_option("--out", fit.out, "Output model JSON")->required();

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Apply a fitted model to new predictors");
  predict_cmd->add_option("--model", predict.model, "Model JSON from fit")->required();
  predict_cmd->add_option("--data", predict.data, "CSV of predictors")->required();
  predict_cmd->add_option("--out", predict.out, "Output predictions CSV")->required();

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic dataset");
  sim_cmd->add_option("--model", sim.model, "1: sine link, 2: absolute-value link")->capture_default_str();
  sim_cmd->add_option("--n", sim.n)->capture_default_str();
  sim_cmd->add_option("--p", sim.p)->capture_default_str();
  sim_cmd->add_option("--theta", sim.theta, "Condition exponent")->capture_default_str();
  sim_cmd->add_option("--noise-sd", sim.noise_sd)->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output CSV")->required();

  ExperimentOptions exp;
  ScenarioConfig& cfg = exp.config;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a comparison experiment into a CSV report");
  exp_cmd->add_option("id", exp.id, "1: tau sweep, 2: theta sweep, 3: d sweep")
      ->required()
      ->check(CLI::Range(1, 3));
  exp_cmd->add_option("--model", cfg.model_id)->capture_default_str();
  exp_cmd->add_option("--theta", cfg.theta, "Condition exponent (experiments 1, 3)")->capture_default_str();
  exp_cmd->add_option("--theta-grid", cfg.theta_grid, "Experiment 2 values (default 0,0.1,...,3)")
      ->delimiter(',');
  exp_cmd->add_option("--n", cfg.n)->capture_default_str();
  exp_cmd->add_option("--p", cfg.p)->capture_default_str();
  exp_cmd->add_option("--replicates", cfg.replicates)->capture_default_str();
  exp_cmd->add_option("--seed", cfg.seed)->capture_default_str();
  exp_cmd->add_option("--slices", cfg.num_slices, "Number of response slices (h+1)")->capture_default_str();
  exp_cmd->add_option("--noise-sd", cfg.noise_sd)->capture_default_str();
  exp_cmd->add_option("--tau-count", cfg.tau_count)->capture_default_str();
  exp_cmd->add_option("--log-tau-min", cfg.log_tau_min)->capture_default_str();
  exp_cmd->add_option("--log-tau-max", cfg.log_tau_max)->capture_default_str();
  exp_cmd->add_option("--log-base", exp.log_base, "e or 10")->capture_default_str();
  exp_cmd->add_option("--tau-grid", cfg.tau_grid_override, "Explicit tau values")->delimiter(',');
  exp_cmd->add_option("--cutoff-d", cfg.cutoff, "d for experiments 1 and 2")->capture_default_str();
  exp_cmd->add_option("--d-grid", cfg.d_grid, "Experiment 3 values (default 1..p)")->delimiter(',');
  exp_cmd->add_option("--methods", exp.methods, "Subset of the six priors")->delimiter(',');
  exp_cmd->add_flag("--independent-replicates", cfg.independent_replicates,
                    "Redraw X for every replicate");
  exp_cmd->add_option("--threads", exp.threads, "Worker threads (capped by GRSIR_THREADS)");
  exp_cmd->add_option("--out", exp.out, "Output report CSV")->required();

  auto* priors_cmd = app.add_subcommand("priors", "List the built-in priors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const json args = invocation(argc, argv);
  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, args, out);
    if (predict_cmd->parsed()) return cmd_predict(predict, args, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim, args, out);
    if (exp_cmd->parsed()) return cmd_experiment(exp, args, out);
    if (priors_cmd->parsed()) return cmd_priors(out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    if (e.code() == ErrorCode::SingularCovariance) {
      err << "hint: the predictor covariance is singular or ill-conditioned; "
             "use a regularized prior such as --prior ridge or --prior pca-ridge\n";
    }
    return is_numerical(e.code()) ? kExitNumerical : kExitUsage;
  }
  return kExitUsage;
}

}  // namespace grsir::cli
