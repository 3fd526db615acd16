#pragma once

#include "grsir/estimator.hpp"
#include "grsir/forward_link.hpp"
#include "grsir/priors.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace grsir {

/// A fitted model plus everything needed to apply it to new predictors.
struct ModelArtifact {
  FitResult fit;
  PriorSpec prior;
  Index d = 0;  // retained subspace dimension (p for full-rank priors)
  Index h = 0;  // number of basis functions (slices - 1)
  std::vector<double> slice_boundaries;
  VectorXd x_bar;
  std::uint64_t seed = 0;
  Index n = 0;
  Index p = 0;
  std::optional<PiecewiseLinearLink> link;
  std::string response;
  std::vector<std::string> predictor_names;
};

nlohmann::json to_json(const ModelArtifact& artifact);
/// Throws Parse on missing keys or inconsistent shapes.
ModelArtifact artifact_from_json(const nlohmann::json& doc);

void save_artifact(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_artifact(const std::string& path);

}  // namespace grsir
