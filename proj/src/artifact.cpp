#include "grsir/artifact.hpp"

#include "grsir/error.hpp"

#include <fstream>

namespace grsir {

using nlohmann::json;

namespace {

json vector_json(const VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
}

MatrixXd matrix_from(const json& j, Index cols) {
  MatrixXd out(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < out.rows(); ++i) {
    const VectorXd row = vector_from(j.at(static_cast<std::size_t>(i)));
    if (row.size() != cols) throw Error(ErrorCode::Parse, "ragged matrix in model artifact");
    out.row(i) = row.transpose();
  }
  return out;
}

}  // namespace

json to_json(const ModelArtifact& a) {
  const FitResult& fit = a.fit;
  json doc;
  doc["prior"] = std::string(to_string(a.prior.kind));
  doc["tau"] = a.prior.kind == PriorKind::Spectral ? json(nullptr) : json(a.prior.tau);
  if (a.prior.kind == PriorKind::Spectral) doc["spectral_weights"] = a.prior.spectral_weights;
  doc["d"] = a.d;
  doc["h"] = a.h;
  doc["slice_boundaries"] = a.slice_boundaries;
  doc["b_hat"] = vector_json(fit.leading_direction());
  doc["directions"] = matrix_json(fit.directions.transpose());
  doc["eigenvalues"] = vector_json(fit.eigenvalues);
  doc["lambda_hat"] = fit.leading_eigenvalue();
  doc["rho_hat"] = fit.rho_hat;
  doc["theta_b"] = fit.theta_b;
  doc["eta_b"] = fit.eta_b;
  doc["objective"] = fit.objective ? json(*fit.objective) : json(nullptr);
  doc["degenerate_gap"] = fit.degenerate_gap;
  if (fit.parameters) {
    doc["c_hat"] = vector_json(fit.parameters->c_hat);
    doc["mu_hat"] = vector_json(fit.parameters->mu_hat);
    doc["v_hat"] = matrix_json(fit.parameters->v_hat);
  } else {
    doc["c_hat"] = nullptr;
    doc["mu_hat"] = nullptr;
    doc["v_hat"] = nullptr;
  }
  doc["x_bar"] = vector_json(a.x_bar);
  doc["seed"] = a.seed;
  doc["n"] = a.n;
  doc["p"] = a.p;
  doc["response"] = a.response;
  doc["predictors"] = a.predictor_names;
  if (a.link) {
    doc["link"] = {{"knots", a.link->knots()}, {"values", a.link->values()}};
  } else {
    doc["link"] = nullptr;
  }
  return doc;
}

ModelArtifact artifact_from_json(const json& doc) {
  try {
    ModelArtifact a;
    const auto kind = parse_prior_kind(doc.at("prior").get<std::string>());
    if (!kind) throw Error(ErrorCode::Parse, "unknown prior in model artifact");
    a.prior.kind = *kind;
    if (!doc.at("tau").is_null()) a.prior.tau = doc.at("tau").get<double>();
    if (*kind == PriorKind::Spectral) {
      a.prior.spectral_weights = doc.at("spectral_weights").get<std::vector<double>>();
    }
    a.d = doc.at("d").get<Index>();
    if (is_subspace_prior(*kind)) a.prior.cutoff = a.d;
    a.h = doc.at("h").get<Index>();
    a.slice_boundaries = doc.at("slice_boundaries").get<std::vector<double>>();
    a.x_bar = vector_from(doc.at("x_bar"));
    a.seed = doc.at("seed").get<std::uint64_t>();
    a.n = doc.at("n").get<Index>();
    a.p = doc.at("p").get<Index>();
    a.response = doc.value("response", std::string("y"));
    a.predictor_names = doc.value("predictors", std::vector<std::string>{});

    FitResult& fit = a.fit;
    fit.directions = matrix_from(doc.at("directions"), a.p).transpose();
    fit.eigenvalues = vector_from(doc.at("eigenvalues"));
    const VectorXd b_hat = vector_from(doc.at("b_hat"));
    if (fit.directions.cols() < 1 || b_hat.size() != a.p || b_hat != fit.directions.col(0)) {
      throw Error(ErrorCode::Parse, "b_hat does not match the first stored direction");
    }
    fit.rho_hat = doc.at("rho_hat").get<double>();
    fit.theta_b = doc.at("theta_b").get<double>();
    fit.eta_b = doc.at("eta_b").get<double>();
    if (!doc.at("objective").is_null()) fit.objective = doc.at("objective").get<double>();
    fit.degenerate_gap = doc.value("degenerate_gap", false);
    if (!doc.at("c_hat").is_null()) {
      IndexParameters params;
      params.c_hat = vector_from(doc.at("c_hat"));
      params.mu_hat = vector_from(doc.at("mu_hat"));
      params.v_hat = matrix_from(doc.at("v_hat"), a.p);
      fit.parameters = std::move(params);
    }
    if (fit.directions.cols() < 1 || fit.eigenvalues.size() != fit.directions.cols() ||
        a.x_bar.size() != a.p) {
      throw Error(ErrorCode::Parse, "model artifact has inconsistent dimensions");
    }
    const json& link = doc.at("link");
    if (!link.is_null()) {
      a.link.emplace(link.at("knots").get<std::vector<double>>(),
                     link.at("values").get<std::vector<double>>());
    }
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed model artifact: ") + e.what());
  }
}

void save_artifact(const ModelArtifact& artifact, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << to_json(artifact).dump(2) << '\n';
}

ModelArtifact load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open model '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, "'" + path + "' is not valid JSON: " + e.what());
  }
  return artifact_from_json(doc);
}

}  // namespace grsir
