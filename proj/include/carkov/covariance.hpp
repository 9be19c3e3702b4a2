#pragma once

#include <vector>

#include <Eigen/Dense>

#include "carkov/model.hpp"

namespace carkov {

/// One term coef · u^power · e^{iζu} of the covariance on u ≥ 0.
struct CovarianceTerm {
  cplx coef;
  cplx root;
  int power = 0;

  friend bool operator==(const CovarianceTerm&, const CovarianceTerm&) = default;
};

/// r(u) = Σ coef · u^m · e^{iζu} for u ≥ 0, extended evenly to u < 0.
struct CovarianceModel {
  std::vector<CovarianceTerm> terms;
  int k = 0;

  /// Smallest Im ζ over the terms; sets the slowest decay rate.
  double min_decay() const noexcept;
};

/// r^(j)(0) for j = 0..2k (odd orders structurally zero for a valid model)
/// and the one-sided r^(2k+1)(0⁺). r^(2k+1)(0⁻) = −top_plus.
struct SpectralMoments {
  std::vector<double> even_moments;
  double top_plus = 0.0;
  int k = 0;

  double at(int order) const { return even_moments.at(order); }
  double top_minus() const noexcept { return -top_plus; }
  /// G_ij = r^(i+j)(0), i, j = 0..k.
  Eigen::MatrixXd gram() const;
};

/// Relative gap below which two distinct roots are rejected.
inline constexpr double kDegenerateGap = 1e-6;
/// Roots closer than this (relative) are merged into one multiple root.
inline constexpr double kMergeGap = 1e-12;
/// Odd moments below this multiple of r(0) are set to exactly zero.
inline constexpr double kOddSnap = 1e-10;

/// Closes ∫ e^{izu}/|P(z)|² dz in the upper half-plane: r(u) = 2πi Σ Res at
/// the distinct roots, with u^m e^{iζu} terms from higher-order poles.
CovarianceModel residue_expansion(const RootSpec& spec);

/// r^(j)(u) for real u; j = 2k+1 at u = 0 is rejected (OrderTooHigh).
double eval_r(const CovarianceModel& cov, int j, double u);

/// Right-hand r^(j)(u) from the term list for u ≥ 0, any order.
double eval_r_plus(const CovarianceModel& cov, int j, double u);

/// Imaginary part of the term sum at (j, u ≥ 0); zero up to rounding for a
/// valid model.
double imag_residue(const CovarianceModel& cov, int j, double u);

/// r^(2k+1)(0⁺).
double one_sided_top(const CovarianceModel& cov);

SpectralMoments moments(const CovarianceModel& cov);

/// Solves r^(i)(u) = Σ_j α_j(u) r^(i+j)(0), i = 0..k, for u > 0.
Eigen::VectorXd alpha_coeffs(const SpectralMoments& m, const CovarianceModel& cov,
                             double u);

/// d^q/du^q α(u) at u ≥ 0 (right limit at 0): G⁻¹ (r^(i+q)(u⁺))_i.
/// At q = k+1, u = 0 this is the Ito drift vector.
Eigen::VectorXd alpha_derivative(const SpectralMoments& m, const CovarianceModel& cov,
                                 int q, double u);

/// Numerical r^(j)(t) = ∫ Re[(iz)^j e^{izt}] / |P(z)|² dz, independent of the
/// residue expansion. Requires j ≤ 2k.
double quadrature_r(const RootSpec& spec, int j, double t);

/// ∫ |z|^j / |P(z)|² dz, an upper bound on |r^(j)(t)| for every t.
double quadrature_abs_moment(const RootSpec& spec, int j);

/// Solves G x = rhs with partial pivoting; throws SingularGram when the
/// moment matrix is numerically singular.
Eigen::VectorXd solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs);

}  // namespace carkov
