#pragma once

#include <Eigen/Dense>

#include "carkov/covariance.hpp"
#include "carkov/model.hpp"

namespace carkov {

/// dY^(i) = Y^(i+1) dt for i < k, dY^(k) = Σ_j a_j Y^(j) dt + b dW.
struct ItoSystem {
  Eigen::VectorXd drift;       // a_0..a_k
  double b_squared = 0.0;
  double diffusion = 0.0;      // b = +sqrt(b²)
  Eigen::MatrixXd companion;   // ones on the superdiagonal, drift in the last row
  Eigen::VectorXd noise;       // (0, ..., 0, b)

  int k() const noexcept { return static_cast<int>(drift.size()) - 1; }
};

/// Law of Z(0) = (Y, Y', ..., Y^(k)) at stationarity.
struct StationaryLaw {
  Eigen::MatrixXd covariance;  // Σ_ij = (−1)^i r^(i+j)(0)
};

Eigen::VectorXd solve_drift(const SpectralMoments& m);

/// b² = Σ_j a_j r^(j+k)(0)(−1)^{j+1} + (−1)^k r^(2k+1)(0⁻).
double solve_diffusion(const SpectralMoments& m, const Eigen::VectorXd& drift);

/// The 0⁺ form: Σ_j a_j r^(k+j)(0)(−1)^{j+1} + (−1)^{k+1} r^(2k+1)(0⁺).
/// Algebraically equal to solve_diffusion; kept as a redundant check.
double solve_diffusion_plus(const SpectralMoments& m, const Eigen::VectorXd& drift);

StationaryLaw stationary_law(const SpectralMoments& m);

ItoSystem make_ito_system(const Eigen::VectorXd& drift, double b_squared);

struct Assembly {
  CovarianceModel covariance;
  SpectralMoments moments;
  ItoSystem ito;
  StationaryLaw law;
};

/// residue_expansion → moments → drift, diffusion and stationary law.
Assembly assemble(const RootSpec& spec);

/// Coefficients of λ^{k+1} − Σ a_j λ^j, ascending.
RealPolynomial drift_char_poly(const Eigen::VectorXd& drift);

/// ‖AΣ + ΣAᵀ + b² e_k e_kᵀ‖_max / ‖Σ‖_max.
double lyapunov_residual(const ItoSystem& ito, const StationaryLaw& law);

/// max_j |χ_j(drift) − χ_j(roots)| / max(1, |χ_j(roots)|).
double char_poly_mismatch(const RootSpec& spec, const Eigen::VectorXd& drift);

/// |b²c² − 2π Π|ζ_j|²| / (2π Π|ζ_j|²).
double diffusion_scale_mismatch(const RootSpec& spec, double b_squared);

/// Largest distance from a companion eigenvalue to its nearest iζ_j, relative
/// to max|ζ|. Repeated roots are defective eigenvalues, so callers compare
/// against eigen_tolerance() rather than a flat bound.
double eigen_mismatch(const RootSpec& spec, const ItoSystem& ito);
/// 1e-8 scaled by the worst root condition number for simple roots;
/// 100·ε^{1/m} for a root of multiplicity m.
double eigen_tolerance(const RootSpec& spec);

}  // namespace carkov
