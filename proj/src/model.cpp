#include "carkov/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "carkov/error.hpp"

namespace carkov {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveImaginaryPart: return "NonPositiveImaginaryPart";
    case ErrorCode::UnpairedRoot: return "UnpairedRoot";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::NearDegenerateRoots: return "NearDegenerateRoots";
    case ErrorCode::OrderTooHigh: return "OrderTooHigh";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::NonPositiveDiffusion: return "NonPositiveDiffusion";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::TailTooHeavy: return "TailTooHeavy";
    case ErrorCode::EqualRates: return "EqualRates";
    case ErrorCode::PathTooShort: return "PathTooShort";
    case ErrorCode::DegenerateConditioning: return "DegenerateConditioning";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::string describe(cplx z) {
  std::ostringstream os;
  os.precision(17);
  os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  return os.str();
}

bool canonical_less(const cplx& a, const cplx& b) {
  if (a.imag() != b.imag()) return a.imag() < b.imag();
  return a.real() < b.real();
}

}  // namespace

RootSpec validate(std::span<const cplx> roots, double scale) {
  if (roots.empty()) {
    throw Error(ErrorCode::InvalidArgument, "at least one root is required");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::NonPositiveScale, "scale must be positive and finite");
  }
  for (const cplx& z : roots) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw Error(ErrorCode::InvalidArgument, "root " + describe(z) + " is not finite");
    }
    if (!(z.imag() > 0.0)) {
      throw Error(ErrorCode::NonPositiveImaginaryPart,
                  "root " + describe(z) + " is not in the open upper half-plane");
    }
  }

  std::vector<cplx> sorted(roots.begin(), roots.end());
  std::sort(sorted.begin(), sorted.end(), canonical_less);

  // Greedy matching of ζ with a partner ζ' satisfying ζ ≈ −ζ'*. Roots are
  // visited in canonical order and each takes its closest unused partner.
  const std::size_t n = sorted.size();
  std::vector<bool> used(n, false);
  std::vector<cplx> paired;
  paired.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (used[i]) continue;
    const cplx z = sorted[i];
    if (std::abs(2.0 * z.real()) <= kPairTolerance) {
      used[i] = true;
      paired.emplace_back(0.0, z.imag());
      continue;
    }
    std::size_t best = n;
    double best_gap = kPairTolerance;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || used[j]) continue;
      const double gap = std::abs(z + std::conj(sorted[j]));
      if (gap <= best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    if (best == n) {
      throw Error(ErrorCode::UnpairedRoot,
                  "root " + describe(z) + " has no partner at " + describe(-std::conj(z)));
    }
    used[i] = used[best] = true;
    const double rho = 0.5 * (std::abs(z.real()) + std::abs(sorted[best].real()));
    const double sigma = 0.5 * (z.imag() + sorted[best].imag());
    paired.emplace_back(-rho, sigma);
    paired.emplace_back(rho, sigma);
  }
  std::sort(paired.begin(), paired.end(), canonical_less);

  RootSpec spec;
  spec.roots_ = std::move(paired);
  spec.scale_ = scale;
  return spec;
}

double RootSpec::min_sigma() const noexcept {
  double m = roots_.front().imag();
  for (const cplx& z : roots_) m = std::min(m, z.imag());
  return m;
}

double RootSpec::max_modulus() const noexcept {
  double m = 0.0;
  for (const cplx& z : roots_) m = std::max(m, std::abs(z));
  return m;
}

double RealPolynomial::operator()(double x) const noexcept {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
    acc = acc * x + *it;
  }
  return acc;
}

RealPolynomial ode_char_poly(const RootSpec& spec) {
  const cplx I(0.0, 1.0);
  std::vector<cplx> poly{1.0};
  for (const cplx& zeta : spec.roots()) {
    const cplx lambda = I * zeta;
    std::vector<cplx> next(poly.size() + 1, 0.0);
    for (std::size_t q = 0; q < poly.size(); ++q) {
      next[q + 1] += poly[q];
      next[q] -= lambda * poly[q];
    }
    poly = std::move(next);
  }
  RealPolynomial out;
  out.coefficients.reserve(poly.size());
  for (const cplx& c : poly) out.coefficients.push_back(c.real());
  out.coefficients.back() = 1.0;
  return out;
}

double abs_p_squared(const RootSpec& spec, double z) {
  double acc = spec.scale() * spec.scale();
  for (const cplx& zeta : spec.roots()) acc *= std::norm(1.0 - z / zeta);
  return acc;
}

double density_constant(const RootSpec& spec) {
  double acc = 1.0 / (spec.scale() * spec.scale());
  for (const cplx& zeta : spec.roots()) acc *= std::norm(zeta);
  return acc;
}

}  // namespace carkov
