#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "carkov/covariance.hpp"
#include "carkov/markov.hpp"
#include "carkov/model.hpp"
#include "carkov/simulate.hpp"
#include "carkov/validate.hpp"

namespace carkov::io {

using json = nlohmann::json;

/// Model file: {"roots": [[re, im], ...], "scale": c}, plus an optional
/// {"perturbation": {"term": i, "factor": f}} used by negative controls.
struct ModelConfig {
  RootSpec spec;
  std::optional<Perturbation> perturbation;
};

ModelConfig parse_model(const json& j);
ModelConfig load_model(const std::filesystem::path& file);

json to_json(const RootSpec& spec);
json to_json(const CovarianceModel& cov);
json to_json(const SpectralMoments& m);
/// {"a": [...], "b": b, "sigma": [[...]]}
json to_json(const ItoSystem& ito, const StationaryLaw& law);
json to_json(const CheckReport& report);
json to_json(std::span<const CheckReport> reports);

CovarianceModel covariance_from_json(const json& j);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

/// Header `t,y0,...,yk`, one row per grid point.
void write_path_csv(std::ostream& os, const SamplePath& path);

json path_metadata(const SamplePath& path, const RootSpec& spec);

void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace carkov::io
