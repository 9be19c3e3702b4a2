#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carkov/covariance.hpp"
#include "carkov/markov.hpp"
#include "carkov/model.hpp"
#include "carkov/simulate.hpp"

namespace carkov {

/// passed ⇔ statistic ≤ threshold.
struct CheckReport {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
};

CheckReport make_report(std::string name, double statistic, double threshold,
                        std::string detail = {});

inline constexpr double kIdentityTolerance = 1e-8;
inline constexpr double kOracleTolerance = 1e-6;
inline constexpr double kStatisticalBand = 4.0;
inline constexpr int kMinEffectiveSamples = 100;
inline constexpr int kMinReplicates = 1000;

/// max over the grid of |r(u+v) − Σ_j α_j(u) r^(j)(v)| / r(0), with the
/// Gram system taken from `m` and the lagged values from `cov`.
CheckReport check_markov_factorization(const CovarianceModel& cov, const SpectralMoments& m,
                                       std::span<const double> u_grid,
                                       std::span<const double> v_grid);

/// max_t |χ(D) r(t)| / r(0) for the ODE operator χ (default: ode_char_poly).
CheckReport check_ode_annihilation(const RealPolynomial& chi, const CovarianceModel& cov,
                                   std::span<const double> t_grid);
CheckReport check_ode_annihilation(const RootSpec& spec, const CovarianceModel& cov,
                                   std::span<const double> t_grid);

/// Closed-form vs quadrature, |Δ| / ∫|z|^j/|P|², over j ≤ 2k and the t grid.
CheckReport check_oracle(const RootSpec& spec, const CovarianceModel& cov,
                         std::span<const double> t_grid);

CheckReport check_lyapunov(const ItoSystem& ito, const StationaryLaw& law);
CheckReport check_char_consistency(const RootSpec& spec, const ItoSystem& ito);
CheckReport check_diffusion_scale(const RootSpec& spec, const ItoSystem& ito);
CheckReport check_eigenvalues(const RootSpec& spec, const ItoSystem& ito);
/// max_{odd j < 2k} |r^(j)(0⁺)| / r(0): evenness of r.
CheckReport check_evenness(const CovarianceModel& cov);

/// Lagged product estimate r̂(ℓ) = mean_m y_m y_{m+ℓ} (known zero mean) and
/// its overlapping-batch-means standard error.
struct AutocovarianceEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  double effective_samples = 0.0;
};

AutocovarianceEstimate estimate_autocovariance(const SamplePath& path, int row, double lag,
                                               double block_time);

/// Single long path vs r(lag) for row 0. Block length is ten correlation
/// times, 10 / min Im ζ. Throws PathTooShort when fewer than 100 blocks fit.
CheckReport check_empirical_covariance(const SamplePath& path, const CovarianceModel& cov,
                                       std::span<const double> lags);

/// Across independent replicates (all on the same grid), averaging every
/// in-path pair at each lag; SE from the replicate-to-replicate spread.
CheckReport check_replicate_covariance(std::span<const SamplePath> paths,
                                       const CovarianceModel& cov,
                                       std::span<const double> lags);

/// Partial correlation of Y(s), Y(u) given Z(t) (full state) across
/// replicates; also the scalar variant conditioning on Y(t) alone.
struct PartialCorrelationResult {
  CheckReport vector_conditioning;
  /// passed ⇔ the Y(t)-only partial correlation stays inside the band, i.e.
  /// the scalar process looks Markov. Expected to fail for k ≥ 1.
  CheckReport scalar_conditioning;
  double vector_partial = 0.0;
  double scalar_partial = 0.0;
};

PartialCorrelationResult check_partial_correlation(std::span<const SamplePath> paths, int k,
                                                   Eigen::Index s_idx, Eigen::Index t_idx,
                                                   Eigen::Index u_idx);

enum class Budget { fast, full };
Budget budget_from_string(std::string_view name);

/// Optional deliberate corruption of the covariance model, for negative
/// controls: multiply term `term`'s coefficient by `factor`.
struct Perturbation {
  int term = 0;
  double factor = 1.0;
};

struct SuiteOptions {
  Budget budget = Budget::fast;
  std::uint64_t seed = 20240601;
  std::optional<Perturbation> perturbation;
};

/// Every closed-form and statistical check appropriate to k, with
/// deterministic seeds. Failures are data; the suite itself does not throw
/// except on invalid input.
std::vector<CheckReport> run_suite(const RootSpec& spec, const SuiteOptions& options = {});

bool all_passed(std::span<const CheckReport> reports);

}  // namespace carkov
