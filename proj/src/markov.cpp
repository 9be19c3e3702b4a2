#include "carkov/markov.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "carkov/error.hpp"

namespace carkov {

namespace {

double sign_pow(int n) { return n % 2 == 0 ? 1.0 : -1.0; }

}  // namespace

Eigen::VectorXd solve_drift(const SpectralMoments& m) {
  const int k = m.k;
  Eigen::VectorXd rhs(k + 1);
  for (int i = 0; i <= k; ++i) {
    const int order = k + i + 1;
    rhs(i) = order == 2 * k + 1 ? m.top_plus : m.at(order);
  }
  return solve_gram(m.gram(), rhs);
}

double solve_diffusion(const SpectralMoments& m, const Eigen::VectorXd& drift) {
  const int k = m.k;
  double b2 = sign_pow(k) * m.top_minus();
  for (int j = 0; j <= k; ++j) b2 += drift(j) * m.at(j + k) * sign_pow(j + 1);
  if (!(b2 > 0.0)) {
    throw Error(ErrorCode::NonPositiveDiffusion,
                "b^2 = " + std::to_string(b2) + " is not positive; moments are inconsistent");
  }
  return b2;
}

double solve_diffusion_plus(const SpectralMoments& m, const Eigen::VectorXd& drift) {
  const int k = m.k;
  double b2 = sign_pow(k + 1) * m.top_plus;
  for (int j = 0; j <= k; ++j) b2 += drift(j) * m.at(k + j) * sign_pow(j + 1);
  return b2;
}

StationaryLaw stationary_law(const SpectralMoments& m) {
  const int n = m.k + 1;
  StationaryLaw law;
  law.covariance.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) law.covariance(i, j) = sign_pow(i) * m.at(i + j);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(law.covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "stationary covariance of Z(0) is not positive definite");
  }
  return law;
}

ItoSystem make_ito_system(const Eigen::VectorXd& drift, double b_squared) {
  const Eigen::Index n = drift.size();
  ItoSystem ito;
  ito.drift = drift;
  ito.b_squared = b_squared;
  ito.diffusion = std::sqrt(b_squared);
  ito.companion = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) ito.companion(i, i + 1) = 1.0;
  ito.companion.row(n - 1) = drift.transpose();
  ito.noise = Eigen::VectorXd::Zero(n);
  ito.noise(n - 1) = ito.diffusion;
  return ito;
}

Assembly assemble(const RootSpec& spec) {
  Assembly out;
  out.covariance = residue_expansion(spec);
  out.moments = moments(out.covariance);
  const Eigen::VectorXd drift = solve_drift(out.moments);
  const double b2 = solve_diffusion(out.moments, drift);
  out.ito = make_ito_system(drift, b2);
  out.law = stationary_law(out.moments);
  return out;
}

RealPolynomial drift_char_poly(const Eigen::VectorXd& drift) {
  RealPolynomial p;
  p.coefficients.resize(drift.size() + 1);
  for (Eigen::Index j = 0; j < drift.size(); ++j) p.coefficients[j] = -drift(j);
  p.coefficients.back() = 1.0;
  return p;
}

double lyapunov_residual(const ItoSystem& ito, const StationaryLaw& law) {
  const Eigen::MatrixXd& A = ito.companion;
  const Eigen::MatrixXd& S = law.covariance;
  const Eigen::MatrixXd residual = A * S + S * A.transpose() + ito.noise * ito.noise.transpose();
  return residual.cwiseAbs().maxCoeff() / S.cwiseAbs().maxCoeff();
}

double char_poly_mismatch(const RootSpec& spec, const Eigen::VectorXd& drift) {
  const RealPolynomial expected = ode_char_poly(spec);
  const RealPolynomial got = drift_char_poly(drift);
  double worst = 0.0;
  for (std::size_t j = 0; j < expected.coefficients.size(); ++j) {
    const double e = expected.coefficients[j];
    worst = std::max(worst, std::abs(got.coefficients[j] - e) / std::max(1.0, std::abs(e)));
  }
  return worst;
}

double diffusion_scale_mismatch(const RootSpec& spec, double b_squared) {
  const double expected = 2.0 * std::numbers::pi * density_constant(spec);
  return std::abs(b_squared - expected) / expected;
}

double eigen_mismatch(const RootSpec& spec, const ItoSystem& ito) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(ito.companion, false);
  const cplx I(0.0, 1.0);
  double worst = 0.0;
  for (Eigen::Index e = 0; e < solver.eigenvalues().size(); ++e) {
    const cplx lambda = solver.eigenvalues()(e);
    double nearest = std::numeric_limits<double>::infinity();
    for (const cplx& zeta : spec.roots()) nearest = std::min(nearest, std::abs(lambda - I * zeta));
    worst = std::max(worst, nearest);
  }
  return worst / spec.max_modulus();
}

double eigen_tolerance(const RootSpec& spec) {
  int multiplicity = 1;
  const auto& roots = spec.roots();
  for (const cplx& a : roots) {
    int count = 0;
    for (const cplx& b : roots) count += std::abs(a - b) <= kMergeGap * spec.max_modulus();
    multiplicity = std::max(multiplicity, count);
  }
  if (multiplicity == 1) {
    // 1e-8 relative error in the coefficients moves root λ by up to
    // 1e-8 · Σ|c_j||λ|^j / |χ'(λ)|; clustered roots are ill-conditioned.
    const RealPolynomial chi = ode_char_poly(spec);
    double kappa = 1.0;
    for (const cplx& zeta : roots) {
      const cplx lambda = cplx(0.0, 1.0) * zeta;
      double size = 0.0;
      cplx slope = 0.0;
      for (int j = 0; j <= chi.degree(); ++j) {
        size += std::abs(chi.coefficients[j]) * std::pow(std::abs(lambda), j);
        if (j > 0) slope += static_cast<double>(j) * chi.coefficients[j] * std::pow(lambda, j - 1);
      }
      kappa = std::max(kappa, size / (std::abs(slope) * spec.max_modulus()));
    }
    return 1e-8 * kappa;
  }
  // A defective eigenvalue of multiplicity m moves by O(ε^{1/m}).
  return 100.0 * std::pow(std::numeric_limits<double>::epsilon(), 1.0 / multiplicity);
}

}  // namespace carkov
