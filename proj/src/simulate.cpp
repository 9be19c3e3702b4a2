#include "carkov/simulate.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "carkov/error.hpp"

namespace carkov {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::exact: return "exact";
    case Method::euler: return "euler";
    case Method::spectral: return "spectral";
    case Method::moving_average: return "moving_average";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  if (name == "exact") return Method::exact;
  if (name == "euler") return Method::euler;
  if (name == "spectral") return Method::spectral;
  if (name == "moving_average") return Method::moving_average;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

std::mt19937_64 make_stream(std::uint64_t seed, Method method, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(method), static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace {

void require_points(Eigen::Index n_points) {
  if (n_points < 1) throw Error(ErrorCode::InvalidArgument, "a path needs at least one point");
}

Eigen::VectorXd standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Eigen::VectorXd draw_stationary(const StationaryLaw& law, std::mt19937_64& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(law.covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "stationary covariance is not positive definite");
  }
  return llt.matrixL() * standard_normal(rng, law.covariance.rows());
}

void require_state(const std::optional<Eigen::VectorXd>& initial, Eigen::Index dim) {
  if (initial && initial->size() != dim) {
    throw Error(ErrorCode::InvalidArgument, "initial state has the wrong dimension");
  }
}

}  // namespace

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& q, double reference_norm) {
  const Eigen::MatrixXd sym = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  Eigen::VectorXd values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -1e-10 * reference_norm) {
      throw Error(ErrorCode::FactorizationFailure,
                  "innovation covariance is indefinite (eigenvalue " +
                      std::to_string(values(i)) + ")");
    }
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

StepOperator exact_step_operator(const ItoSystem& ito, const StationaryLaw& law, double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidArgument, "dt must be finite and non-negative");
  }
  StepOperator op;
  op.transition = (ito.companion * dt).exp();
  const Eigen::MatrixXd& S = law.covariance;
  const Eigen::MatrixXd innovation = S - op.transition * S * op.transition.transpose();
  op.innovation_factor = psd_sqrt(innovation, S.cwiseAbs().maxCoeff());
  return op;
}

SamplePath sample_exact(const ItoSystem& ito, const StationaryLaw& law, double dt,
                        Eigen::Index n_points, std::uint64_t seed, std::uint64_t stream,
                        const std::optional<Eigen::VectorXd>& initial) {
  require_points(n_points);
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  const StepOperator op = exact_step_operator(ito, law, dt);
  auto rng = make_stream(seed, Method::exact, stream);
  const Eigen::Index dim = ito.drift.size();
  require_state(initial, dim);

  SamplePath path;
  path.dt = dt;
  path.seed = seed;
  path.method = Method::exact;
  path.values.resize(dim, n_points);
  path.values.col(0) = initial ? *initial : draw_stationary(law, rng);

  std::normal_distribution<double> normal;
  Eigen::VectorXd xi(dim);
  for (Eigen::Index m = 0; m + 1 < n_points; ++m) {
    for (Eigen::Index i = 0; i < dim; ++i) xi(i) = normal(rng);
    path.values.col(m + 1).noalias() = op.transition * path.values.col(m);
    path.values.col(m + 1).noalias() += op.innovation_factor * xi;
  }
  return path;
}

double euler_spectral_radius(const ItoSystem& ito, double dt) {
  const Eigen::Index n = ito.companion.rows();
  const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(n, n) + ito.companion * dt;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(step, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

SamplePath sample_euler(const ItoSystem& ito, const StationaryLaw& law, double dt,
                        Eigen::Index n_points, std::uint64_t seed, std::uint64_t stream,
                        const std::optional<Eigen::VectorXd>& initial) {
  require_points(n_points);
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  const double radius = euler_spectral_radius(ito, dt);
  if (!(radius < 1.0)) {
    throw Error(ErrorCode::UnstableStep,
                "explicit Euler step is unstable: spectral radius of I + A*dt is " +
                    std::to_string(radius));
  }
  auto rng = make_stream(seed, Method::euler, stream);
  const Eigen::Index dim = ito.drift.size();
  require_state(initial, dim);
  const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(dim, dim) + ito.companion * dt;
  const double kick = ito.diffusion * std::sqrt(dt);

  SamplePath path;
  path.dt = dt;
  path.seed = seed;
  path.method = Method::euler;
  path.values.resize(dim, n_points);
  path.values.col(0) = initial ? *initial : draw_stationary(law, rng);

  std::normal_distribution<double> normal;
  for (Eigen::Index m = 0; m + 1 < n_points; ++m) {
    path.values.col(m + 1).noalias() = step * path.values.col(m);
    path.values(dim - 1, m + 1) += kick * normal(rng);
  }
  return path;
}

Eigen::MatrixXd euler_stationary_covariance(const ItoSystem& ito, double dt) {
  const Eigen::Index n = ito.companion.rows();
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) + ito.companion * dt;
  Eigen::MatrixXd kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = M(i, j) * M;
  }
  const Eigen::MatrixXd Q = dt * ito.noise * ito.noise.transpose();
  // Column-major vec: vec(M P Mᵀ) = (M ⊗ M) vec(P).
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n * n, n * n) - kron;
  const Eigen::VectorXd p = lhs.partialPivLu().solve(q);
  Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

// ---------------------------------------------------------------------------

double spectral_tail_bound(const RootSpec& spec, int order, double z_max) {
  const int k = spec.k();
  if (order < 0 || order > k) {
    throw Error(ErrorCode::InvalidArgument, "row order must lie in 0..k");
  }
  const double m = spec.max_modulus();
  if (!(z_max > m)) return std::numeric_limits<double>::infinity();
  // For |z| ≥ Z > max|ζ|: |P(z)|² ≥ c² z^{2k+2} (1 − m/Z)^{2k+2} / Π|ζ_j|².
  const double slack = std::pow(1.0 - m / z_max, 2 * k + 2);
  const int decay = 2 * k + 1 - 2 * order;
  return 2.0 * density_constant(spec) / slack * std::pow(z_max, -decay) / decay;
}

namespace {

std::vector<double> row_variances(const RootSpec& spec, int rows) {
  const CovarianceModel cov = residue_expansion(spec);
  std::vector<double> out;
  for (int d = 0; d < rows; ++d) out.push_back(std::abs(eval_r_plus(cov, 2 * d, 0.0)));
  return out;
}

int resolve_rows(const RootSpec& spec, int rows) {
  if (rows == 0) return spec.k() + 1;
  if (rows < 1 || rows > spec.k() + 1) {
    throw Error(ErrorCode::InvalidArgument, "rows must lie in 1..k+1");
  }
  return rows;
}

}  // namespace

double default_z_max(const RootSpec& spec, int rows) {
  rows = resolve_rows(spec, rows);
  const std::vector<double> variance = row_variances(spec, rows);
  double z = 2.0 * spec.max_modulus();
  for (int d = 0; d < rows; ++d) {
    while (spectral_tail_bound(spec, d, z) > kSpectralTail * variance[d]) z *= 1.05;
  }
  return z;
}

SpectralSampler::SpectralSampler(const RootSpec& spec, TimeGrid grid, double z_max,
                                 int n_panels, int rows)
    : grid_(grid), rows_(resolve_rows(spec, rows)) {
  if (grid.count < 1 || !(grid.dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "time grid needs count >= 1 and dt > 0");
  }
  if (n_panels < 2) throw Error(ErrorCode::InvalidArgument, "need at least two panels");
  const std::vector<double> variance = row_variances(spec, rows_);
  for (int d = 0; d < rows_; ++d) {
    const double tail = spectral_tail_bound(spec, d, z_max);
    if (!(tail <= kSpectralTail * variance[d])) {
      throw Error(ErrorCode::TailTooHeavy,
                  "z_max = " + std::to_string(z_max) + " leaves tail variance " +
                      std::to_string(tail) + " in derivative row " + std::to_string(d));
    }
  }

  double s = std::numeric_limits<double>::infinity();
  for (const cplx& zeta : spec.roots()) s = std::min(s, std::abs(zeta));
  const double x_max = std::asinh(z_max / s);
  const double dx = 2.0 * x_max / n_panels;
  nodes_.resize(n_panels);
  weights_.resize(n_panels);
  for (int p = 0; p < n_panels; ++p) {
    const double lo = -x_max + p * dx;
    const double hi = lo + dx;
    const double z = s * std::sinh(0.5 * (lo + hi));
    nodes_[p] = z;
    weights_[p] = s * (std::sinh(hi) - std::sinh(lo)) / abs_p_squared(spec, z);
  }

  // Tables cost count × panels doubles each; fall back to on-the-fly trig
  // for long grids.
  tabulated_ = grid_.count * n_panels <= (Eigen::Index{1} << 21);
  if (tabulated_) {
    cos_table_.resize(grid_.count, n_panels);
    sin_table_.resize(grid_.count, n_panels);
    for (Eigen::Index n = 0; n < grid_.count; ++n) {
      const double t = grid_.t0 + n * grid_.dt;
      for (int p = 0; p < n_panels; ++p) {
        cos_table_(n, p) = std::cos(t * nodes_[p]);
        sin_table_(n, p) = std::sin(t * nodes_[p]);
      }
    }
  }
}

SamplePath SpectralSampler::draw(std::uint64_t seed, std::uint64_t replicate) const {
  auto rng = make_stream(seed, Method::spectral, replicate);
  const Eigen::Index panels = static_cast<Eigen::Index>(nodes_.size());
  const Eigen::VectorXd xi1 = standard_normal(rng, panels);
  const Eigen::VectorXd xi2 = standard_normal(rng, panels);

  // u_i = z^i √w ξ₁, v_i = z^i √w ξ₂ (one column per derivative row).
  Eigen::MatrixXd u(panels, rows_), v(panels, rows_);
  for (Eigen::Index p = 0; p < panels; ++p) {
    double amp = std::sqrt(weights_[p]);
    for (int i = 0; i < rows_; ++i) {
      u(p, i) = amp * xi1(p);
      v(p, i) = amp * xi2(p);
      amp *= nodes_[p];
    }
  }

  Eigen::MatrixXd cu, su, cv, sv;  // count × rows
  if (tabulated_) {
    cu = cos_table_ * u;
    su = sin_table_ * u;
    cv = cos_table_ * v;
    sv = sin_table_ * v;
  } else {
    cu.resize(grid_.count, rows_);
    su.resize(grid_.count, rows_);
    cv.resize(grid_.count, rows_);
    sv.resize(grid_.count, rows_);
    Eigen::RowVectorXd c(panels), s(panels);
    for (Eigen::Index n = 0; n < grid_.count; ++n) {
      const double t = grid_.t0 + n * grid_.dt;
      for (Eigen::Index p = 0; p < panels; ++p) {
        c(p) = std::cos(t * nodes_[p]);
        s(p) = std::sin(t * nodes_[p]);
      }
      cu.row(n) = c * u;
      su.row(n) = s * u;
      cv.row(n) = c * v;
      sv.row(n) = s * v;
    }
  }

  SamplePath path;
  path.t0 = grid_.t0;
  path.dt = grid_.dt;
  path.seed = seed;
  path.method = Method::spectral;
  path.values.resize(rows_, grid_.count);
  // d^i/dt^i of cos(tz), sin(tz) is z^i cos(tz + iπ/2), z^i sin(tz + iπ/2).
  for (int i = 0; i < rows_; ++i) {
    switch (i % 4) {
      case 0: path.values.row(i) = (cu.col(i) + sv.col(i)).transpose(); break;
      case 1: path.values.row(i) = (cv.col(i) - su.col(i)).transpose(); break;
      case 2: path.values.row(i) = (-cu.col(i) - sv.col(i)).transpose(); break;
      case 3: path.values.row(i) = (su.col(i) - cv.col(i)).transpose(); break;
    }
  }
  return path;
}

double SpectralSampler::implied_covariance(int row_i, int row_j, double lag) const {
  const double phase = 0.5 * std::numbers::pi * (row_j - row_i);
  double acc = 0.0;
  for (std::size_t p = 0; p < nodes_.size(); ++p) {
    acc += weights_[p] * std::pow(nodes_[p], row_i + row_j) * std::cos(lag * nodes_[p] + phase);
  }
  return acc;
}

SamplePath sample_spectral(const RootSpec& spec, TimeGrid grid, double z_max, int n_panels,
                           std::uint64_t seed) {
  return SpectralSampler(spec, grid, z_max, n_panels).draw(seed, 0);
}

// ---------------------------------------------------------------------------

double MAKernel::operator()(double x) const noexcept {
  return x < 0.0 ? amp * std::exp(a_minus * x) : amp * std::exp(-a_plus * x);
}

double MAKernel::derivative(double x) const noexcept {
  return x < 0.0 ? amp * a_minus * std::exp(a_minus * x) : -amp * a_plus * std::exp(-a_plus * x);
}

namespace {

void require_rates(double a_minus, double a_plus) {
  if (!(a_minus > 0.0) || !(a_plus > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "kernel decay rates must be positive");
  }
}

}  // namespace

CovarianceModel ma_covariance(const MAKernel& kernel) {
  const double am = kernel.a_minus;
  const double ap = kernel.a_plus;
  require_rates(am, ap);
  if (std::abs(am - ap) <= 1e-12 * std::max(am, ap)) {
    throw Error(ErrorCode::EqualRates, "equal decay rates need ma_covariance_confluent");
  }
  const double a2 = kernel.amp * kernel.amp;
  const double cross = a2 / (am - ap);
  CovarianceModel cov;
  cov.k = 1;
  cov.terms.push_back({a2 / (2.0 * am) - cross, cplx(0.0, am), 0});
  cov.terms.push_back({a2 / (2.0 * ap) + cross, cplx(0.0, ap), 0});
  return cov;
}

CovarianceModel ma_covariance_confluent(double amp, double rate) {
  require_rates(rate, rate);
  const double a2 = amp * amp;
  CovarianceModel cov;
  cov.k = 1;
  cov.terms.push_back({a2 / rate, cplx(0.0, rate), 0});
  cov.terms.push_back({a2, cplx(0.0, rate), 1});
  return cov;
}

RootSpec ma_root_spec(const MAKernel& kernel) {
  require_rates(kernel.a_minus, kernel.a_plus);
  if (!(kernel.amp > 0.0)) throw Error(ErrorCode::InvalidArgument, "amplitude must be positive");
  const double c = std::sqrt(2.0 * std::numbers::pi) * kernel.a_minus * kernel.a_plus /
                   (kernel.amp * (kernel.a_minus + kernel.a_plus));
  const std::vector<cplx> roots{cplx(0.0, kernel.a_minus), cplx(0.0, kernel.a_plus)};
  return validate(roots, c);
}

SamplePath sample_moving_average(const MAKernel& kernel, double dt, Eigen::Index n_points,
                                 std::uint64_t seed) {
  require_points(n_points);
  require_rates(kernel.a_minus, kernel.a_plus);
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");

  // Kernel truncated where e^{−a|x|} < e^{−25}.
  const Eigen::Index past = static_cast<Eigen::Index>(std::ceil(25.0 / (kernel.a_plus * dt)));
  const Eigen::Index future = static_cast<Eigen::Index>(std::ceil(25.0 / (kernel.a_minus * dt)));
  // Offsets x = (q + ½)dt for q in [−future, past).
  const Eigen::Index taps = past + future;
  Eigen::VectorXd f(taps), df(taps);
  const double root_dt = std::sqrt(dt);
  for (Eigen::Index q = 0; q < taps; ++q) {
    const double x = (static_cast<double>(q - future) + 0.5) * dt;
    f(q) = kernel(x) * root_dt;
    df(q) = kernel.derivative(x) * root_dt;
  }

  auto rng = make_stream(seed, Method::moving_average, 0);
  // Noise cell j (θ_j = (j + ½)dt) is stored at index j + past.
  const Eigen::VectorXd noise = standard_normal(rng, n_points + taps);

  SamplePath path;
  path.dt = dt;
  path.seed = seed;
  path.method = Method::moving_average;
  path.values.resize(2, n_points);
  for (Eigen::Index n = 0; n < n_points; ++n) {
    double y = 0.0;
    double dy = 0.0;
    for (Eigen::Index q = 0; q < taps; ++q) {
      // x = t_n − θ_j = (n − j − ½)dt  ⇒  j = n − (q − future) − 1.
      const double w = noise(n - (q - future) - 1 + past);
      y += f(q) * w;
      dy += df(q) * w;
    }
    path.values(0, n) = y;
    path.values(1, n) = dy;
  }
  return path;
}

}  // namespace carkov
