#include "carkov/io.hpp"

#include <charconv>
#include <fstream>

#include "carkov/error.hpp"

namespace carkov::io {

namespace {

cplx complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::ConfigError, "complex numbers are written as [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json complex_to(cplx z) { return json::array({z.real(), z.imag()}); }

json matrix_to(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ModelConfig parse_model(const json& j) {
  if (!j.is_object() || !j.contains("roots") || !j["roots"].is_array()) {
    throw Error(ErrorCode::ConfigError, "model needs a \"roots\" array");
  }
  std::vector<cplx> roots;
  for (const json& r : j["roots"]) roots.push_back(complex_from(r));
  double scale = 1.0;
  if (j.contains("scale")) {
    if (!j["scale"].is_number()) throw Error(ErrorCode::ConfigError, "\"scale\" must be a number");
    scale = j["scale"].get<double>();
  }
  ModelConfig cfg{validate(roots, scale), std::nullopt};
  if (j.contains("perturbation")) {
    const json& p = j["perturbation"];
    if (!p.is_object() || !p.contains("term") || !p.contains("factor")) {
      throw Error(ErrorCode::ConfigError, "perturbation needs \"term\" and \"factor\"");
    }
    cfg.perturbation = Perturbation{p["term"].get<int>(), p["factor"].get<double>()};
  }
  return cfg;
}

ModelConfig load_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open model file " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "malformed JSON in " + file.string() + ": " + e.what());
  }
  return parse_model(j);
}

json to_json(const RootSpec& spec) {
  json roots = json::array();
  for (const cplx& z : spec.roots()) roots.push_back(complex_to(z));
  return {{"roots", roots}, {"scale", spec.scale()}};
}

json to_json(const CovarianceModel& cov) {
  json terms = json::array();
  for (const CovarianceTerm& t : cov.terms) {
    terms.push_back({{"coef", complex_to(t.coef)}, {"root", complex_to(t.root)}, {"power", t.power}});
  }
  return {{"terms", terms}, {"k", cov.k}};
}

CovarianceModel covariance_from_json(const json& j) {
  if (!j.is_object() || !j.contains("terms") || !j.contains("k")) {
    throw Error(ErrorCode::ConfigError, "covariance model needs \"terms\" and \"k\"");
  }
  CovarianceModel cov;
  cov.k = j["k"].get<int>();
  for (const json& t : j["terms"]) {
    cov.terms.push_back({complex_from(t.at("coef")), complex_from(t.at("root")),
                         t.at("power").get<int>()});
  }
  return cov;
}

json to_json(const SpectralMoments& m) {
  return {{"even_moments", m.even_moments}, {"top_plus", m.top_plus}, {"k", m.k}};
}

json to_json(const ItoSystem& ito, const StationaryLaw& law) {
  return {{"a", std::vector<double>(ito.drift.data(), ito.drift.data() + ito.drift.size())},
          {"b", ito.diffusion},
          {"sigma", matrix_to(law.covariance)}};
}

json to_json(const CheckReport& r) {
  // JSON has no infinity; a check that could not run reports null.
  json stat = std::isfinite(r.statistic) ? json(r.statistic) : json(nullptr);
  return {{"name", r.name},
          {"passed", r.passed},
          {"statistic", stat},
          {"threshold", r.threshold},
          {"detail", r.detail}};
}

json to_json(std::span<const CheckReport> reports) {
  json arr = json::array();
  for (const CheckReport& r : reports) arr.push_back(to_json(r));
  return arr;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_path_csv(std::ostream& os, const SamplePath& path) {
  const Eigen::Index rows = path.values.rows();
  std::string line = "t";
  for (Eigen::Index i = 0; i < rows; ++i) line += ",y" + std::to_string(i);
  os << line << '\n';
  for (Eigen::Index n = 0; n < path.size(); ++n) {
    line = format_double(path.t0 + static_cast<double>(n) * path.dt);
    for (Eigen::Index i = 0; i < rows; ++i) {
      line += ',';
      line += format_double(path.values(i, n));
    }
    os << line << '\n';
  }
}

json path_metadata(const SamplePath& path, const RootSpec& spec) {
  return {{"method", std::string(to_string(path.method))},
          {"dt", path.dt},
          {"t0", path.t0},
          {"seed", path.seed},
          {"points", path.size()},
          {"model", to_json(spec)}};
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + file.string());
  out << text;
}

}  // namespace carkov::io
