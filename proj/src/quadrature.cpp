// Numerical evaluation of the spectral integrals, kept independent of the
// residue expansion so the two can be compared.

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "carkov/covariance.hpp"
#include "carkov/error.hpp"

namespace carkov {

namespace {

using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;
using boost::math::quadrature::ooura_fourier_cos;
using boost::math::quadrature::ooura_fourier_sin;

constexpr double kRelTol = 1e-11;
constexpr double kAcceptTol = 1e-8;

// Width of the finite panel integrated with Gauss-Kronrod; the density's
// features (peaks near ±ρ with width σ) all sit inside it.
double core_width(const RootSpec& spec) { return 4.0 * spec.max_modulus() + 1.0; }

template <class F>
double integrate_core(F f, double a, double b) {
  double err = 0.0;
  double l1 = 0.0;
  const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 25, kRelTol, &err, &l1);
  if (!(err <= kAcceptTol * std::max(l1, std::numeric_limits<double>::min()))) {
    throw Error(ErrorCode::NotConverged, "Gauss-Kronrod panel refinement did not converge");
  }
  return v;
}

// 2 ∫_0^∞ weight(z) dz for a non-oscillatory, even integrand.
template <class F>
double integrate_half_line(const RootSpec& spec, F weight) {
  const double zc = core_width(spec);
  const double core = integrate_core(weight, 0.0, zc);
  exp_sinh<double> tail_rule;
  double err = 0.0;
  double l1 = 0.0;
  const double tail = tail_rule.integrate(weight, zc, std::numeric_limits<double>::infinity(),
                                          kRelTol, &err, &l1);
  if (!(err <= kAcceptTol * std::max(l1, std::numeric_limits<double>::min()))) {
    throw Error(ErrorCode::NotConverged, "tail integral did not converge");
  }
  return 2.0 * (core + tail);
}

// 2 ∫_0^∞ weight(z) trig(ω z) dz with trig = cos (use_cos) or sin, ω > 0.
template <class F>
double integrate_fourier(const RootSpec& spec, F weight, double omega, bool use_cos) {
  const double zc = core_width(spec);
  const double core = integrate_core(
      [&](double z) { return weight(z) * (use_cos ? std::cos(omega * z) : std::sin(omega * z)); },
      0.0, zc);

  // Tail on [zc, ∞) after shifting z = zc + x:
  //   cos(ω(zc+x)) = cos(ωzc)cos(ωx) − sin(ωzc)sin(ωx)
  //   sin(ω(zc+x)) = sin(ωzc)cos(ωx) + cos(ωzc)sin(ωx)
  auto shifted = [&](double x) { return weight(zc + x); };
  ooura_fourier_cos<double> cos_rule(kRelTol);
  ooura_fourier_sin<double> sin_rule(kRelTol);
  const auto [ic, ec] = cos_rule.integrate(shifted, omega);
  const auto [is, es] = sin_rule.integrate(shifted, omega);
  const double scale = std::max({std::abs(ic), std::abs(is), std::abs(core), 1e-300});
  if (!(ec * std::abs(ic) + es * std::abs(is) <= kAcceptTol * scale)) {
    throw Error(ErrorCode::NotConverged, "oscillatory tail integral did not converge");
  }
  const double c = std::cos(omega * zc);
  const double s = std::sin(omega * zc);
  const double tail = use_cos ? (c * ic - s * is) : (s * ic + c * is);
  return 2.0 * (core + tail);
}

// z^j / |P(z)|² in log form so exp_sinh can probe huge z without inf/inf.
auto moment_weight(const RootSpec& spec, int j) {
  return [&spec, j](double z) {
    double lg = -2.0 * std::log(spec.scale());
    for (const cplx& zeta : spec.roots()) lg -= std::log(std::norm(1.0 - z / zeta));
    if (j > 0) lg += j * std::log(std::abs(z));
    return std::exp(lg);
  };
}

}  // namespace

double quadrature_r(const RootSpec& spec, int j, double t) {
  if (j < 0 || j > 2 * spec.k()) {
    throw Error(ErrorCode::OrderTooHigh, "quadrature needs 0 <= j <= 2k for an L1 integrand");
  }
  const auto weight = moment_weight(spec, j);

  // Re[(iz)^j e^{izt}]: j even → (−1)^{j/2} z^j cos(zt); j odd → −(−1)^{(j−1)/2} z^j sin(zt).
  if (j % 2 == 0) {
    const double sign = (j / 2) % 2 == 0 ? 1.0 : -1.0;
    if (t == 0.0) return sign * integrate_half_line(spec, weight);
    return sign * integrate_fourier(spec, weight, std::abs(t), true);
  }
  if (t == 0.0) return 0.0;
  const double sign = ((j - 1) / 2) % 2 == 0 ? -1.0 : 1.0;
  const double odd = t > 0.0 ? 1.0 : -1.0;
  return sign * odd * integrate_fourier(spec, weight, std::abs(t), false);
}

double quadrature_abs_moment(const RootSpec& spec, int j) {
  if (j < 0 || j > 2 * spec.k()) {
    throw Error(ErrorCode::OrderTooHigh, "absolute moment diverges for j > 2k");
  }
  return integrate_half_line(spec, moment_weight(spec, j));
}

}  // namespace carkov
