// carkov: analyze, simulate and verify stationary Gaussian processes with a
// Markov derivative vector.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "carkov/error.hpp"
#include "carkov/io.hpp"

namespace fs = std::filesystem;
using carkov::io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;

struct Options {
  std::string model;
  std::string method = "exact";
  double dt = 0.01;
  long long steps = 1000;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string budget = "fast";
  std::optional<double> z_max;
  int panels = carkov::kDefaultPanels;
};

void emit_error(std::string_view code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("CARKOV_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw carkov::Error(carkov::ErrorCode::ConfigError,
                        "CARKOV_SEED is not an unsigned integer: " + std::string(env));
  }
  return 1;
}

fs::path prepare_out(const Options& o) {
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw carkov::Error(carkov::ErrorCode::ConfigError,
                        "cannot create output directory " + dir.string() + ": " + ec.message());
  }
  return dir;
}

json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

int cmd_analyze(const Options& o) {
  const carkov::io::ModelConfig cfg = carkov::io::load_model(o.model);
  const carkov::RootSpec& spec = cfg.spec;
  const carkov::Assembly a = carkov::assemble(spec);
  const int k = spec.k();

  json eigen_check = {{"max_mismatch", carkov::eigen_mismatch(spec, a.ito)},
                      {"tolerance", carkov::eigen_tolerance(spec)}};
  eigen_check["passed"] = eigen_check["max_mismatch"].get<double>() <= carkov::eigen_tolerance(spec);

  json report = {
      {"model", carkov::io::to_json(spec)},
      {"k", k},
      {"covariance", carkov::io::to_json(a.covariance)},
      {"moments", carkov::io::to_json(a.moments)},
      {"ito", carkov::io::to_json(a.ito, a.law)},
      {"b_squared", a.ito.b_squared},
      {"char_poly", carkov::ode_char_poly(spec).coefficients},
      {"eigen_check", eigen_check},
      {"alpha_derivative_at_zero",
       vector_json(carkov::alpha_derivative(a.moments, a.covariance, k + 1, 0.0))},
  };

  const fs::path dir = prepare_out(o);
  carkov::io::write_text(dir / "analysis.json", report.dump(2) + "\n");

  std::string csv = "t,r\n";
  for (long long n = 0; n <= o.steps; ++n) {
    const double t = static_cast<double>(n) * o.dt;
    csv += carkov::io::format_double(t) + "," +
           carkov::io::format_double(carkov::eval_r(a.covariance, 0, t)) + "\n";
  }
  carkov::io::write_text(dir / "covariance.csv", csv);

  std::cout << "k = " << k << ", b^2 = " << carkov::io::format_double(a.ito.b_squared)
            << ", drift = " << report["ito"]["a"].dump() << '\n';
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  const carkov::io::ModelConfig cfg = carkov::io::load_model(o.model);
  const carkov::RootSpec& spec = cfg.spec;
  const std::uint64_t seed = resolve_seed(o);
  const carkov::Method method = carkov::method_from_string(o.method);
  const auto points = static_cast<Eigen::Index>(o.steps) + 1;

  carkov::SamplePath path;
  json meta_extra = json::object();
  switch (method) {
    case carkov::Method::exact: {
      const carkov::Assembly a = carkov::assemble(spec);
      path = carkov::sample_exact(a.ito, a.law, o.dt, points, seed);
      break;
    }
    case carkov::Method::euler: {
      const carkov::Assembly a = carkov::assemble(spec);
      path = carkov::sample_euler(a.ito, a.law, o.dt, points, seed);
      break;
    }
    case carkov::Method::spectral: {
      const double z_max = o.z_max ? *o.z_max : carkov::default_z_max(spec, 0);
      path = carkov::sample_spectral(spec, carkov::TimeGrid{0.0, o.dt, points}, z_max, o.panels,
                                     seed);
      meta_extra = {{"z_max", z_max}, {"panels", o.panels}};
      break;
    }
    case carkov::Method::moving_average:
      throw carkov::Error(carkov::ErrorCode::InvalidArgument,
                          "method must be exact, euler or spectral");
  }

  const fs::path dir = prepare_out(o);
  std::ostringstream csv;
  carkov::io::write_path_csv(csv, path);
  carkov::io::write_text(dir / "path.csv", csv.str());
  json meta = carkov::io::path_metadata(path, spec);
  meta.update(meta_extra);
  carkov::io::write_text(dir / "path.json", meta.dump(2) + "\n");
  std::cout << "wrote " << path.size() << " points to " << (dir / "path.csv").string() << '\n';
  return kExitOk;
}

int cmd_verify(const Options& o) {
  const carkov::io::ModelConfig cfg = carkov::io::load_model(o.model);
  carkov::SuiteOptions options;
  options.budget = carkov::budget_from_string(o.budget);
  if (o.seed || std::getenv("CARKOV_SEED")) options.seed = resolve_seed(o);
  options.perturbation = cfg.perturbation;

  const std::vector<carkov::CheckReport> reports = carkov::run_suite(cfg.spec, options);
  const fs::path dir = prepare_out(o);
  carkov::io::write_text(dir / "verify.json", carkov::io::to_json(reports).dump(2) + "\n");

  std::cout << std::left << std::setw(40) << "check" << std::setw(6) << "ok" << std::setw(14)
            << "statistic" << "threshold\n";
  for (const carkov::CheckReport& r : reports) {
    std::ostringstream stat;
    stat << std::setprecision(4) << r.statistic;
    std::cout << std::left << std::setw(40) << r.name << std::setw(6)
              << (r.passed ? "PASS" : "FAIL") << std::setw(14) << stat.str() << r.threshold
              << '\n';
  }
  const bool ok = carkov::all_passed(reports);
  std::cout << (ok ? "all checks passed" : "verification failed") << '\n';
  return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary Gaussian processes with a Markov derivative vector"};
  app.require_subcommand(1);
  Options o;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "model JSON file")->required();
    sub->add_option("--out", o.out, "output directory");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "covariance, moments and Ito system");
  add_model(analyze);
  analyze->add_option("--dt", o.dt, "covariance curve spacing")->check(CLI::PositiveNumber);
  analyze->add_option("--steps", o.steps, "covariance curve intervals")->check(CLI::NonNegativeNumber);

  CLI::App* simulate = app.add_subcommand("simulate", "sample a path");
  add_model(simulate);
  simulate->add_option("--method", o.method, "exact|euler|spectral")
      ->check(CLI::IsMember({"exact", "euler", "spectral"}));
  simulate->add_option("--dt", o.dt, "time step")->check(CLI::PositiveNumber);
  simulate->add_option("--steps", o.steps, "number of steps")->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", o.seed, "RNG seed (fallback: CARKOV_SEED)");
  simulate->add_option("--z-max", o.z_max, "spectral cutoff (default: from the tail bound)");
  simulate->add_option("--panels", o.panels, "spectral panels")->check(CLI::PositiveNumber);

  CLI::App* verify = app.add_subcommand("verify", "run the check suite");
  add_model(verify);
  verify->add_option("--budget", o.budget, "fast|full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--seed", o.seed, "suite seed (fallback: CARKOV_SEED)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("ConfigError", e.what());
    return kExitConfig;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(o);
    if (simulate->parsed()) return cmd_simulate(o);
    return cmd_verify(o);
  } catch (const carkov::Error& e) {
    emit_error(carkov::to_string(e.code()), e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    emit_error("ConfigError", e.what());
    return kExitConfig;
  }
}
