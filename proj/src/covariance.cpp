#include "carkov/covariance.hpp"

#include <cmath>
#include <numbers>

#include "carkov/error.hpp"

namespace carkov {

namespace {

struct DistinctRoot {
  cplx value;
  int multiplicity;
};

std::vector<DistinctRoot> group_roots(const RootSpec& spec) {
  const double scale = spec.max_modulus();
  std::vector<DistinctRoot> out;
  for (const cplx& z : spec.roots()) {
    bool merged = false;
    for (DistinctRoot& d : out) {
      const double gap = std::abs(d.value - z);
      if (gap <= kMergeGap * scale) {
        ++d.multiplicity;
        merged = true;
        break;
      }
      if (gap < kDegenerateGap * scale) {
        throw Error(ErrorCode::NearDegenerateRoots,
                    "two distinct roots are closer than the degeneracy gap; "
                    "merge them into a repeated root or separate them");
      }
    }
    if (!merged) out.push_back({z, 1});
  }
  return out;
}

double binomial(int n, int q) {
  double acc = 1.0;
  for (int i = 1; i <= q; ++i) acc = acc * (n - q + i) / i;
  return acc;
}

double factorial(int n) {
  double acc = 1.0;
  for (int i = 2; i <= n; ++i) acc *= i;
  return acc;
}

// Taylor coefficients, in h = z − at, of (z − pole)^(−exponent) up to h^order.
std::vector<cplx> inverse_power_series(cplx at, cplx pole, int exponent, int order) {
  const cplx d = at - pole;
  std::vector<cplx> c(order + 1);
  const cplx base = std::pow(d, -exponent);
  for (int q = 0; q <= order; ++q) {
    const double sign = (q % 2 == 0) ? 1.0 : -1.0;
    c[q] = base * sign * binomial(exponent + q - 1, q) * std::pow(d, -q);
  }
  return c;
}

std::vector<cplx> multiply_truncated(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> c(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; i + j < a.size(); ++j) c[i + j] += a[i] * b[j];
  }
  return c;
}

// Σ over terms of coef · d^j/du^j [u^m e^{iζu}].
cplx term_sum(const CovarianceModel& cov, int j, double u) {
  const cplx I(0.0, 1.0);
  cplx acc = 0.0;
  for (const CovarianceTerm& t : cov.terms) {
    const cplx a = I * t.root;
    const int m = t.power;
    cplx poly = 0.0;
    for (int q = 0; q <= std::min(j, m); ++q) {
      const double falling = factorial(m) / factorial(m - q);
      const double upow = (m - q == 0) ? 1.0 : std::pow(u, m - q);
      poly += binomial(j, q) * falling * upow * std::pow(a, j - q);
    }
    acc += t.coef * poly * std::exp(a * u);
  }
  return acc;
}

}  // namespace

double CovarianceModel::min_decay() const noexcept {
  double m = terms.empty() ? 0.0 : terms.front().root.imag();
  for (const CovarianceTerm& t : terms) m = std::min(m, t.root.imag());
  return m;
}

Eigen::MatrixXd SpectralMoments::gram() const {
  const int n = k + 1;
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = even_moments.at(i + j);
  }
  return g;
}

CovarianceModel residue_expansion(const RootSpec& spec) {
  const std::vector<DistinctRoot> distinct = group_roots(spec);
  const double K = density_constant(spec);
  const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
  const cplx I(0.0, 1.0);

  CovarianceModel cov;
  cov.k = spec.k();
  for (const DistinctRoot& w : distinct) {
    const int order = w.multiplicity - 1;
    // g(z) = K / [Π_{other upper}(z − w')^{n'} · Π_{all lower}(z − w̄')^{n'}].
    std::vector<cplx> g(order + 1, 0.0);
    g[0] = K;
    for (const DistinctRoot& other : distinct) {
      if (&other != &w) {
        g = multiply_truncated(
            g, inverse_power_series(w.value, other.value, other.multiplicity, order));
      }
      g = multiply_truncated(
          g, inverse_power_series(w.value, std::conj(other.value), other.multiplicity, order));
    }
    // Res = e^{iwu} Σ_m (iu)^m / m! · g_{n−1−m}.
    for (int m = 0; m <= order; ++m) {
      const cplx coef = two_pi_i * std::pow(I, m) / factorial(m) * g[order - m];
      cov.terms.push_back({coef, w.value, m});
    }
  }
  return cov;
}

double eval_r_plus(const CovarianceModel& cov, int j, double u) {
  if (j < 0 || u < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "eval_r_plus needs j >= 0 and u >= 0");
  }
  return term_sum(cov, j, u).real();
}

double imag_residue(const CovarianceModel& cov, int j, double u) {
  return term_sum(cov, j, u).imag();
}

double eval_r(const CovarianceModel& cov, int j, double u) {
  if (j < 0) throw Error(ErrorCode::InvalidArgument, "derivative order must be >= 0");
  if (u == 0.0 && j > 2 * cov.k) {
    throw Error(ErrorCode::OrderTooHigh,
                "r^(" + std::to_string(j) + ") does not exist at 0; use one_sided_top");
  }
  if (u >= 0.0) return eval_r_plus(cov, j, u);
  const double sign = (j % 2 == 0) ? 1.0 : -1.0;
  return sign * eval_r_plus(cov, j, -u);
}

double one_sided_top(const CovarianceModel& cov) {
  return eval_r_plus(cov, 2 * cov.k + 1, 0.0);
}

SpectralMoments moments(const CovarianceModel& cov) {
  SpectralMoments m;
  m.k = cov.k;
  m.even_moments.resize(2 * cov.k + 1);
  for (int j = 0; j <= 2 * cov.k; ++j) m.even_moments[j] = eval_r_plus(cov, j, 0.0);
  const double r0 = m.even_moments[0];
  for (int j = 1; j <= 2 * cov.k; j += 2) {
    if (std::abs(m.even_moments[j]) < kOddSnap * std::abs(r0)) m.even_moments[j] = 0.0;
  }
  m.top_plus = one_sided_top(cov);
  return m;
}

Eigen::VectorXd solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = gram.rows();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double diag = std::abs(gram(i, i));
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw Error(ErrorCode::SingularGram, "moment matrix has a zero diagonal entry");
    }
    d(i) = 1.0 / std::sqrt(diag);
  }
  const Eigen::MatrixXd scaled = d.asDiagonal() * gram * d.asDiagonal();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(scaled);
  if (!(lu.rcond() > 1e-13)) {
    throw Error(ErrorCode::SingularGram, "moment matrix is numerically singular");
  }
  const Eigen::VectorXd y = lu.solve(d.asDiagonal() * rhs);
  return d.asDiagonal() * y;
}

Eigen::VectorXd alpha_derivative(const SpectralMoments& m, const CovarianceModel& cov,
                                 int q, double u) {
  const int n = m.k + 1;
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs(i) = eval_r_plus(cov, i + q, u);
  return solve_gram(m.gram(), rhs);
}

Eigen::VectorXd alpha_coeffs(const SpectralMoments& m, const CovarianceModel& cov,
                             double u) {
  if (!(u > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha_coeffs needs u > 0");
  return alpha_derivative(m, cov, 0, u);
}

}  // namespace carkov
