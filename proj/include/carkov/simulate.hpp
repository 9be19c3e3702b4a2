#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "carkov/covariance.hpp"
#include "carkov/markov.hpp"
#include "carkov/model.hpp"

namespace carkov {

enum class Method { exact, euler, spectral, moving_average };

std::string_view to_string(Method m) noexcept;
Method method_from_string(std::string_view name);

/// Z(t) = (Y, Y', ..., Y^(k)) on a uniform grid t0 + n·dt.
struct SamplePath {
  double t0 = 0.0;
  double dt = 0.0;
  Eigen::MatrixXd values;  // (k+1) rows × N columns
  std::uint64_t seed = 0;
  Method method = Method::exact;

  Eigen::Index size() const noexcept { return values.cols(); }
  int k() const noexcept { return static_cast<int>(values.rows()) - 1; }
};

/// Independent, reproducible generator for (seed, method, stream).
std::mt19937_64 make_stream(std::uint64_t seed, Method method, std::uint64_t stream);

/// Z_{m+1} = Φ Z_m + L ξ_m with Φ = exp(A dt) and L Lᵀ = Σ − ΦΣΦᵀ.
struct StepOperator {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd innovation_factor;
};

StepOperator exact_step_operator(const ItoSystem& ito, const StationaryLaw& law, double dt);

/// Symmetric square root of a PSD matrix. Eigenvalues below
/// −1e-10·reference_norm throw FactorizationFailure; smaller negatives are
/// clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& q, double reference_norm);

/// Z_0 is drawn from the stationary law unless `initial` is given.
SamplePath sample_exact(const ItoSystem& ito, const StationaryLaw& law, double dt,
                        Eigen::Index n_points, std::uint64_t seed, std::uint64_t stream = 0,
                        const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Explicit Euler-Maruyama, started from the stationary law. Throws
/// UnstableStep when I + A·dt has spectral radius ≥ 1.
SamplePath sample_euler(const ItoSystem& ito, const StationaryLaw& law, double dt,
                        Eigen::Index n_points, std::uint64_t seed, std::uint64_t stream = 0,
                        const std::optional<Eigen::VectorXd>& initial = std::nullopt);

double euler_spectral_radius(const ItoSystem& ito, double dt);

/// Stationary covariance of the Euler chain itself: P = M P Mᵀ + dt·bbᵀ.
Eigen::MatrixXd euler_stationary_covariance(const ItoSystem& ito, double dt);

// ---------------------------------------------------------------------------
// Spectral representation Y(t) = ∫ cos(tz) f(z) dW₁(z) + ∫ sin(tz) f(z) dW₂(z)
// with f = 1/|P|, discretised by a midpoint rule on [−z_max, z_max].
// ---------------------------------------------------------------------------

inline constexpr int kDefaultPanels = 4096;
/// Required tail variance of each emitted row, relative to that row's variance.
inline constexpr double kSpectralTail = 1e-6;

struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  Eigen::Index count = 1;
};

/// Analytic upper bound on ∫_{|z|>z_max} z^{2·order} / |P(z)|² dz, or +∞
/// when z_max is too small for the bound to apply.
double spectral_tail_bound(const RootSpec& spec, int order, double z_max);

/// Smallest z_max (up to a factor 1.05) meeting kSpectralTail for every row
/// below `rows`.
double default_z_max(const RootSpec& spec, int rows);

class SpectralSampler {
 public:
  /// `rows` is the number of emitted derivative rows (1..k+1, 0 = all).
  /// Panels are uniform in x with z = s·sinh(x), s = min|ζ|, so the spacing
  /// is fine where the density lives and geometric in the tail.
  SpectralSampler(const RootSpec& spec, TimeGrid grid, double z_max,
                  int n_panels = kDefaultPanels, int rows = 0);

  SamplePath draw(std::uint64_t seed, std::uint64_t replicate = 0) const;

  /// Covariance of the discretised representation between row i at time s
  /// and row j at time s + lag (the law every draw follows exactly).
  double implied_covariance(int row_i, int row_j, double lag) const;

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  int rows() const noexcept { return rows_; }

 private:
  TimeGrid grid_;
  int rows_;
  std::vector<double> nodes_;
  std::vector<double> weights_;  // panel width · f(node)²
  bool tabulated_ = false;
  Eigen::MatrixXd cos_table_;  // count × panels
  Eigen::MatrixXd sin_table_;
};

SamplePath sample_spectral(const RootSpec& spec, TimeGrid grid, double z_max,
                           int n_panels, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Moving-average kernel f(x) = A e^{a⁻x} (x < 0), A e^{−a⁺x} (x > 0), k = 1.
// ---------------------------------------------------------------------------

struct MAKernel {
  double a_minus = 1.0;
  double a_plus = 1.0;
  double amp = 1.0;

  double operator()(double x) const noexcept;
  double derivative(double x) const noexcept;
};

/// Covariance of ∫ f(t − θ) dW(θ) for a⁻ ≠ a⁺ (EqualRates otherwise).
CovarianceModel ma_covariance(const MAKernel& kernel);

/// Confluent branch a⁻ = a⁺ = a: r(u) = (A²/a)(1 + au)e^{−au}.
CovarianceModel ma_covariance_confluent(double amp, double rate);

/// The RootSpec {i a⁻, i a⁺} whose 1/|P|² equals the kernel's spectral density.
RootSpec ma_root_spec(const MAKernel& kernel);

/// Riemann-sum discretisation of ∫ f(t − θ) dW(θ) on a θ-grid of spacing dt;
/// emits Y and Y'.
SamplePath sample_moving_average(const MAKernel& kernel, double dt, Eigen::Index n_points,
                                 std::uint64_t seed);

}  // namespace carkov
