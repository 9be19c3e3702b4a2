#pragma once

#include <complex>
#include <span>
#include <vector>

namespace carkov {

using cplx = std::complex<double>;

/// Absolute tolerance on |ζ + ζ'*| when matching root pairs.
inline constexpr double kPairTolerance = 1e-9;

/// The spectral polynomial P(z) = c Π_j (1 − z/ζ_j), given by its roots in
/// the open upper half-plane. Only obtainable through validate(), so every
/// instance satisfies the class invariants: Im ζ_j > 0, the root multiset is
/// closed under ζ ↦ −ζ*, c > 0, and roots are in canonical (Im, Re) order.
class RootSpec {
 public:
  const std::vector<cplx>& roots() const noexcept { return roots_; }
  double scale() const noexcept { return scale_; }
  /// Number of derivatives of Y carried by the Markov state (degree − 1).
  int k() const noexcept { return static_cast<int>(roots_.size()) - 1; }

  double min_sigma() const noexcept;
  double max_modulus() const noexcept;

  friend RootSpec validate(std::span<const cplx> roots, double scale);
  friend bool operator==(const RootSpec&, const RootSpec&) = default;

 private:
  RootSpec() = default;
  std::vector<cplx> roots_;
  double scale_ = 1.0;
};

/// Validates raw roots and scale. Pairs matched within kPairTolerance are
/// symmetrised exactly (ρ and −ρ share one σ; self-paired roots get ρ = 0),
/// so validate() is idempotent and the result round-trips bit-exactly.
RootSpec validate(std::span<const cplx> roots, double scale);

/// Real polynomial, coefficients in ascending degree.
struct RealPolynomial {
  std::vector<double> coefficients;

  int degree() const noexcept {
    return static_cast<int>(coefficients.size()) - 1;
  }
  double operator()(double x) const noexcept;
};

/// Monic χ(λ) = Π_j (λ − iζ_j), the characteristic polynomial of the
/// constant-coefficient ODE annihilating r on (0, ∞).
RealPolynomial ode_char_poly(const RootSpec& spec);

/// |P(z)|² on the real axis.
double abs_p_squared(const RootSpec& spec, double z);

/// Π_j |ζ_j|² / c², the constant in 1/|P(z)|² = K / Π_j |z − ζ_j|².
double density_constant(const RootSpec& spec);

}  // namespace carkov
