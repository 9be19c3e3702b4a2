#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "carkov/error.hpp"
#include "carkov/markov.hpp"
#include "carkov/simulate.hpp"
#include "carkov/validate.hpp"
#include "random_specs.hpp"

using namespace carkov;
using carkov::testing::make_spec;
using carkov::testing::random_spec;
using std::numbers::pi;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no carkov::Error thrown";
  return ErrorCode::InvalidArgument;
}

// exp(A dt) through the companion eigenbasis: eigenvalues iζ_j, eigenvectors
// (1, λ, λ², ...). Simple roots only.
Eigen::MatrixXd transition_by_eigenbasis(const RootSpec& spec, double dt) {
  const int n = spec.k() + 1;
  Eigen::MatrixXcd V(n, n);
  Eigen::VectorXcd e(n);
  for (int j = 0; j < n; ++j) {
    const cplx lambda = cplx(0.0, 1.0) * spec.roots()[j];
    cplx p = 1.0;
    for (int i = 0; i < n; ++i) {
      V(i, j) = p;
      p *= lambda;
    }
    e(j) = std::exp(lambda * dt);
  }
  return (V * e.asDiagonal() * V.inverse()).real();
}

}  // namespace

TEST(ExactStep, ZeroStepIsIdentity) {
  const Assembly a = assemble(make_spec({{1.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}}));
  const StepOperator op = exact_step_operator(a.ito, a.law, 0.0);
  EXPECT_TRUE(op.transition.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-15));
  EXPECT_LE(op.innovation_factor.cwiseAbs().maxCoeff(), 1e-4);
}

TEST(ExactStep, OrnsteinUhlenbeckExample) {
  const Assembly a = assemble(make_spec({{0.0, 1.0}}));
  const StepOperator op = exact_step_operator(a.ito, a.law, std::log(2.0));
  EXPECT_NEAR(op.transition(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(op.innovation_factor(0, 0) * op.innovation_factor(0, 0), 0.75 * pi, 1e-13);
}

TEST(ExactStep, PreservesStationaryLaw) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const RootSpec spec = random_spec(rng, 4);
    const Assembly a = assemble(spec);
    for (double dt : {1e-3, 0.05, 0.7}) {
      const StepOperator op = exact_step_operator(a.ito, a.law, dt);
      const Eigen::MatrixXd& S = a.law.covariance;
      const Eigen::MatrixXd back = op.transition * S * op.transition.transpose() +
                                   op.innovation_factor * op.innovation_factor.transpose();
      EXPECT_LE((back - S).cwiseAbs().maxCoeff(), 1e-9 * S.cwiseAbs().maxCoeff())
          << trial << " dt=" << dt;
    }
  }
}

TEST(ExactStep, MatchesEigenbasisOracle) {
  for (const RootSpec& spec :
       {make_spec({{0.0, 0.7}}), make_spec({{1.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}}),
        make_spec({{0.0, 0.5}, {0.0, 1.5}, {2.0, 0.8}, {-2.0, 0.8}})}) {
    const Assembly a = assemble(spec);
    for (double dt : {0.01, 0.3, 2.0}) {
      const Eigen::MatrixXd phi = exact_step_operator(a.ito, a.law, dt).transition;
      const Eigen::MatrixXd oracle = transition_by_eigenbasis(spec, dt);
      EXPECT_LE((phi - oracle).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + oracle.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(ExactStep, TransitionReproducesCovarianceLag) {
  // Cov(Z(t+h), Z(t)) = Φ(h) Σ, and its (0,0) entry is r(h).
  const RootSpec spec = make_spec({{1.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}});
  const Assembly a = assemble(spec);
  for (double h : {0.1, 0.5, 1.0, 3.0}) {
    const Eigen::MatrixXd lagged = exact_step_operator(a.ito, a.law, h).transition * a.law.covariance;
    EXPECT_NEAR(lagged(0, 0), eval_r(a.covariance, 0, h), 1e-10 * a.law.covariance(0, 0));
  }
}

TEST(PsdSqrt, ClampsRoundoffAndRejectsIndefinite) {
  Eigen::Matrix2d q;
  q << 4.0, 0.0, 0.0, -1e-14;
  const Eigen::MatrixXd s = psd_sqrt(q, 4.0);
  EXPECT_NEAR(s(0, 0), 2.0, 1e-15);
  EXPECT_EQ(s(1, 1), 0.0);
  q(1, 1) = -1e-3;
  EXPECT_EQ(code_of([&] { (void)psd_sqrt(q, 4.0); }), ErrorCode::FactorizationFailure);
}

TEST(SampleExact, SeedDeterminism) {
  const Assembly a = assemble(make_spec({{0.0, 1.0}, {0.0, 1.0}}));
  const SamplePath p = sample_exact(a.ito, a.law, 0.01, 1000, 42);
  const SamplePath q = sample_exact(a.ito, a.law, 0.01, 1000, 42);
  const SamplePath r = sample_exact(a.ito, a.law, 0.01, 1000, 43);
  const SamplePath s = sample_exact(a.ito, a.law, 0.01, 1000, 42, 1);
  EXPECT_EQ(p.values, q.values);
  EXPECT_NE(p.values, r.values);
  EXPECT_NE(p.values, s.values);
  EXPECT_EQ(p.values.rows(), 2);
  EXPECT_EQ(p.size(), 1000);
  EXPECT_EQ(p.k(), 1);
}

TEST(SampleExact, SinglePoint) {
  const Assembly a = assemble(make_spec({{0.0, 1.0}}));
  const SamplePath p = sample_exact(a.ito, a.law, 0.5, 1, 1);
  EXPECT_EQ(p.size(), 1);
  EXPECT_EQ(code_of([&] { (void)sample_exact(a.ito, a.law, 0.5, 0, 1); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { (void)sample_exact(a.ito, a.law, -0.5, 5, 1); }),
            ErrorCode::InvalidArgument);
}

TEST(SampleExact, StationaryStatistics) {
  // k = 0, ζ = i: r(u) = π e^{−u}.
  const Assembly a = assemble(make_spec({{0.0, 1.0}}));
  const SamplePath p = sample_exact(a.ito, a.law, 0.01, 400000, 7);
  for (double lag : {0.0, 1.0}) {
    const AutocovarianceEstimate est = estimate_autocovariance(p, 0, lag, 10.0);
    EXPECT_NEAR(est.value, pi * std::exp(-lag), 4.0 * est.standard_error) << lag;
  }
}

TEST(SampleEuler, UnstableStepRejected) {
  const Assembly a = assemble(make_spec({{0.0, 1.0}}));
  EXPECT_GE(euler_spectral_radius(a.ito, 2.5), 1.0);
  EXPECT_EQ(code_of([&] { (void)sample_euler(a.ito, a.law, 2.5, 10, 1); }),
            ErrorCode::UnstableStep);
}

TEST(SampleEuler, DeterministicStep) {
  // b = 0: one Euler step from a fixed state is exactly (I + A dt) z.
  Assembly a = assemble(make_spec({{1.0, 1.0}, {-1.0, 1.0}}));
  ItoSystem quiet = a.ito;
  quiet.diffusion = 0.0;
  quiet.b_squared = 0.0;
  quiet.noise.setZero();
  Eigen::VectorXd z0(2);
  z0 << 1.0, -0.5;
  const double dt = 0.01;
  const SamplePath p = sample_euler(quiet, a.law, dt, 3, 5, 0, z0);
  const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(2, 2) + quiet.companion * dt;
  EXPECT_TRUE(p.values.col(1).isApprox(step * z0, 1e-15));
  EXPECT_TRUE(p.values.col(2).isApprox(step * step * z0, 1e-15));

  const SamplePath zero = sample_euler(quiet, a.law, dt, 50, 5, 0, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(zero.values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(code_of([&] { (void)sample_euler(quiet, a.law, dt, 3, 5, 0, Eigen::VectorXd::Zero(3)); }),
            ErrorCode::InvalidArgument);
}

TEST(SampleEuler, StationaryBiasIsFirstOrder) {
  // OU: the Euler chain has variance b²/(2α − α²dt), bias O(dt).
  const Assembly a = assemble(make_spec({{0.0, 1.0}}));
  const double exact = a.law.covariance(0, 0);
  const double coarse = euler_stationary_covariance(a.ito, 0.01)(0, 0);
  const double fine = euler_stationary_covariance(a.ito, 0.001)(0, 0);
  EXPECT_NEAR(coarse, 2 * pi / (2.0 - 0.01), 1e-12);
  const double ratio = (coarse - exact) / (fine - exact);
  EXPECT_GT(ratio, 9.0);
  EXPECT_LT(ratio, 11.0);

  const Assembly b = assemble(make_spec({{1.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}}));
  const double e2 = b.law.covariance(0, 0);
  const double r2 = (euler_stationary_covariance(b.ito, 0.01)(0, 0) - e2) /
                    (euler_stationary_covariance(b.ito, 0.001)(0, 0) - e2);
  EXPECT_GT(r2, 8.5);
  EXPECT_LT(r2, 11.5);
}

TEST(SampleEuler, MatchesItsOwnStationaryLaw) {
  const Assembly a = assemble(make_spec({{0.0, 1.0}}));
  const double dt = 0.05;
  const SamplePath p = sample_euler(a.ito, a.law, dt, 200000, 9);
  const AutocovarianceEstimate est = estimate_autocovariance(p, 0, 0.0, 10.0);
  EXPECT_NEAR(est.value, euler_stationary_covariance(a.ito, dt)(0, 0), 4.0 * est.standard_error);
}

TEST(Spectral, TailBoundRejectsSmallZMax) {
  const RootSpec spec = make_spec({{0.0, 1.0}, {0.0, 1.0}});
  EXPECT_EQ(code_of([&] { SpectralSampler(spec, TimeGrid{0.0, 0.1, 4}, 3.0); }),
            ErrorCode::TailTooHeavy);
  EXPECT_TRUE(std::isinf(spectral_tail_bound(spec, 0, 0.5)));
  const double z = default_z_max(spec, 0);
  for (int d = 0; d <= 1; ++d) {
    EXPECT_LE(spectral_tail_bound(spec, d, z), kSpectralTail * std::abs(eval_r_plus(residue_expansion(spec), 2 * d, 0.0)));
  }
}

TEST(Spectral, TailBoundIsAnUpperBound) {
  // Compare with a brute-force tail for k = 0, ζ = i: ∫_{|z|>Z} dz/(1+z²) = π − 2 atan Z.
  const RootSpec spec = make_spec({{0.0, 1.0}});
  for (double Z : {5.0, 50.0, 500.0}) {
    const double exact = pi - 2.0 * std::atan(Z);
    const double bound = spectral_tail_bound(spec, 0, Z);
    EXPECT_GE(bound, exact);
    EXPECT_LE(bound, 2.0 * exact);
  }
}

TEST(Spectral, ImpliedCovarianceMatchesClosedForm) {
  for (const RootSpec& spec :
       {make_spec({{0.0, 1.0}}), make_spec({{0.0, 1.0}, {0.0, 1.0}}),
        make_spec({{1.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}})}) {
    const int k = spec.k();
    const CovarianceModel cov = residue_expansion(spec);
    const SpectralSampler sampler(spec, TimeGrid{0.0, 0.5, 3}, default_z_max(spec, 0));
    for (int i = 0; i <= k; ++i) {
      for (int j = 0; j <= k; ++j) {
        // Cov(Y^(i)(s), Y^(j)(s+u)) = (−1)^i r^(i+j)(u).
        const double scale = std::sqrt(std::abs(eval_r_plus(cov, 2 * i, 0.0)) *
                                       std::abs(eval_r_plus(cov, 2 * j, 0.0)));
        for (double lag : {0.0, 0.5, 1.0, 2.0}) {
          if (lag == 0.0 && i + j > 2 * k) continue;
          const double sign = (i % 2 == 0) ? 1.0 : -1.0;
          const double want = sign * eval_r_plus(cov, i + j, lag);
          EXPECT_NEAR(sampler.implied_covariance(i, j, lag), want, 1e-3 * scale)
              << "k=" << k << " i=" << i << " j=" << j << " lag=" << lag;
        }
      }
    }
    // Even density: the implied covariance is symmetric in the lag.
    EXPECT_NEAR(sampler.implied_covariance(0, 0, 1.3), sampler.implied_covariance(0, 0, -1.3),
                1e-14);
  }
}

TEST(Spectral, SeedDeterminismAndShape) {
  const RootSpec spec = make_spec({{0.0, 1.0}, {0.0, 1.0}});
  const double z = default_z_max(spec, 0);
  const SamplePath a = sample_spectral(spec, TimeGrid{0.0, 0.1, 20}, z, 512, 3);
  const SamplePath b = sample_spectral(spec, TimeGrid{0.0, 0.1, 20}, z, 512, 3);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values.rows(), 2);
  EXPECT_EQ(a.size(), 20);
  // Tabulated and on-the-fly trig paths agree.
  const SpectralSampler small(spec, TimeGrid{0.0, 0.1, 20}, z, 512);
  const SpectralSampler large(spec, TimeGrid{0.0, 0.1, 5000}, z, 512);
  const SamplePath s = small.draw(8, 2);
  const SamplePath l = large.draw(8, 2);
  EXPECT_LE((s.values - l.values.leftCols(20)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Spectral, ReplicatesFollowTheLaw) {
  // k = 0: across replicates, Var Y(0) ≈ Var Y(2) ≈ π and Cov(Y(0), Y(1)) ≈ π/e.
  const RootSpec spec = make_spec({{0.0, 1.0}});
  const SpectralSampler sampler(spec, TimeGrid{0.0, 1.0, 3}, default_z_max(spec, 1), kDefaultPanels, 1);
  const int n = 10000;
  std::vector<double> v0(n), v2(n), c01(n);
  for (int r = 0; r < n; ++r) {
    const SamplePath p = sampler.draw(17, r);
    v0[r] = p.values(0, 0) * p.values(0, 0);
    v2[r] = p.values(0, 2) * p.values(0, 2);
    c01[r] = p.values(0, 0) * p.values(0, 1);
  }
  const auto mean_se = [n](const std::vector<double>& x) {
    double m = 0.0, q = 0.0;
    for (double v : x) m += v;
    m /= n;
    for (double v : x) q += (v - m) * (v - m);
    return std::pair{m, std::sqrt(q / (n - 1) / n)};
  };
  const auto [m0, s0] = mean_se(v0);
  const auto [m2, s2] = mean_se(v2);
  const auto [m01, s01] = mean_se(c01);
  EXPECT_NEAR(m0, pi, 4 * s0);
  EXPECT_NEAR(m2, pi, 4 * s2);
  EXPECT_NEAR(m01, pi / std::exp(1.0), 4 * s01);
}

TEST(MovingAverage, CovarianceExample) {
  // A = 1, a⁻ = 1, a⁺ = 2.
  const CovarianceModel cov = ma_covariance(MAKernel{1.0, 2.0, 1.0});
  ASSERT_EQ(cov.terms.size(), 2u);
  EXPECT_NEAR(cov.terms[0].coef.real(), 1.5, 1e-14);
  EXPECT_NEAR(cov.terms[1].coef.real(), -0.75, 1e-14);
  // Smoothness at 0: a⁻A₁ + a⁺A₂ = 0.
  EXPECT_NEAR(cov.terms[0].coef.real() + cov.terms[1].coef.real() * 2.0, 0.0, 1e-14);
  EXPECT_NEAR(eval_r(cov, 1, 0.0), 0.0, 1e-14);
}

TEST(MovingAverage, CovarianceMatchesDirectIntegral) {
  // r(u) = ∫ f(x) f(x + u) dx, by midpoint rule.
  const MAKernel kernel{0.6, 1.7, 1.3};
  const CovarianceModel cov = ma_covariance(kernel);
  const double h = 1e-4;
  for (double u : {0.0, 0.4, 1.5}) {
    double acc = 0.0;
    for (double x = -60.0 + h / 2; x < 60.0; x += h) acc += kernel(x) * kernel(x + u) * h;
    EXPECT_NEAR(eval_r(cov, 0, u), acc, 1e-6 * acc) << u;
  }
}

TEST(MovingAverage, EqualRatesAndConfluentBranch) {
  EXPECT_EQ(code_of([] { (void)ma_covariance(MAKernel{1.0, 1.0, 1.0}); }), ErrorCode::EqualRates);
  const double a = 1.5, amp = 0.8;
  const CovarianceModel conf = ma_covariance_confluent(amp, a);
  for (double u : {0.0, 0.3, 2.0}) {
    EXPECT_NEAR(eval_r(conf, 0, u), amp * amp / a * (1 + a * u) * std::exp(-a * u), 1e-14);
  }
  // Approached from unequal rates.
  const CovarianceModel near = ma_covariance(MAKernel{a * (1 - 1e-5), a * (1 + 1e-5), amp});
  EXPECT_NEAR(eval_r(near, 0, 0.7), eval_r(conf, 0, 0.7), 1e-6);
}

TEST(MovingAverage, RootSpecMatchesKernel) {
  for (const MAKernel& kernel : {MAKernel{0.5, 2.0, 1.0}, MAKernel{1.2, 0.3, 2.5}}) {
    const CovarianceModel direct = ma_covariance(kernel);
    const CovarianceModel spectral = residue_expansion(ma_root_spec(kernel));
    for (double u : {0.0, 0.5, 1.0, 4.0}) {
      EXPECT_NEAR(eval_r(direct, 0, u), eval_r(spectral, 0, u), 1e-12 * eval_r(direct, 0, 0.0));
    }
  }
  const CovarianceModel conf = ma_covariance_confluent(1.0, 1.0);
  const CovarianceModel via = residue_expansion(ma_root_spec(MAKernel{1.0, 1.0, 1.0}));
  EXPECT_NEAR(eval_r(conf, 0, 0.9), eval_r(via, 0, 0.9), 1e-12);
}

TEST(MovingAverage, SamplerVariance) {
  const MAKernel kernel{0.5, 2.0, 1.0};
  const CovarianceModel cov = ma_covariance(kernel);
  const SamplePath p = sample_moving_average(kernel, 0.02, 100000, 4);
  EXPECT_EQ(p.values.rows(), 2);
  const AutocovarianceEstimate est = estimate_autocovariance(p, 0, 0.0, 20.0);
  // Riemann-sum bias is O(dt²) relative; well inside the band here.
  EXPECT_NEAR(est.value, eval_r(cov, 0, 0.0), 4 * est.standard_error);
  const AutocovarianceEstimate d = estimate_autocovariance(p, 1, 0.0, 20.0);
  EXPECT_NEAR(d.value, -eval_r(cov, 2, 0.0), 4 * d.standard_error + 0.02 * std::abs(eval_r(cov, 2, 0.0)));
}

TEST(MethodNames, RoundTrip) {
  for (Method m : {Method::exact, Method::euler, Method::spectral, Method::moving_average}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_EQ(code_of([] { (void)method_from_string("rk4"); }), ErrorCode::InvalidArgument);
}
