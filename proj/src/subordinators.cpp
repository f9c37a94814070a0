#include "psou/subordinators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "psou/quadrature.hpp"

namespace psou {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

Complex complex_log1p(Complex x) {
  if (std::abs(x) < 1e-4) return x - x * x / 2.0 + x * x * x / 3.0;
  return std::log(1.0 + x);
}

Complex complex_expm1(Complex w) {
  if (std::abs(w) < 1e-4) return w + w * w / 2.0 + w * w * w / 6.0;
  return std::exp(w) - 1.0;
}

// E[exp(i tau x^T M x)] - 1 for x ~ N(0, I), given the eigenvalues of M:
// prod_k (1 - 2 i tau m_k)^{-1/2} - 1, evaluated without cancellation near 0.
Complex gaussian_quadratic_cf_minus_one(const Vector& eig, double tau) {
  Complex w = 0.0;
  for (Eigen::Index k = 0; k < eig.size(); ++k) w += -0.5 * complex_log1p(-2.0 * kI * tau * eig(k));
  return complex_expm1(w);
}

Vector whitened_eigenvalues(const PsdMat& c, const SymMat& z) {
  const Matrix root = c.sqrt();
  return SymMat::symmetrize(root * z.matrix() * root.transpose()).eigenvalues();
}

QuadratureOptions exponent_quadrature() {
  QuadratureOptions opts;
  opts.abs_tol = 1e-14;
  opts.rel_tol = 1e-13;
  opts.max_intervals = 4000;
  return opts;
}

// int_0^inf (f(eps) - 1) p(eps) d eps over the GIG density on the log axis.
Complex gig_expectation_minus_one(const GigMixing& g, const Vector& eig) {
  const double nu = g.nu, delta = g.delta, alpha = g.alpha;
  const double log_norm = nu * std::log(alpha / delta) - std::numbers::ln2 - log_bessel_k(nu, delta * alpha);
  auto log_weight = [&](double v) {
    // log(p(e^v) e^v)
    return log_norm + nu * v - 0.5 * (delta * delta * std::exp(-v) + alpha * alpha * std::exp(v));
  };
  const double y = (nu + std::sqrt(nu * nu + alpha * alpha * delta * delta)) / (alpha * alpha);
  const double mode = std::log(y);
  const double peak = log_weight(mode);
  double lo = mode - 1.0, hi = mode + 1.0;
  while (log_weight(lo) > peak - 46.0) lo = mode - 2.0 * (mode - lo);
  while (log_weight(hi) > peak - 46.0) hi = mode + 2.0 * (hi - mode);
  auto f = [&](double v) {
    return gaussian_quadratic_cf_minus_one(eig, std::exp(v)) * std::exp(log_weight(v));
  };
  const auto res = integrate_adaptive(f, lo, hi, exponent_quadrature());
  if (!res.converged) {
    throw Error(ErrorCode::kQuadrature, "char_exponent: mixing quadrature did not converge (error " +
                                            std::to_string(res.error) + ")");
  }
  return res.value;
}

// int_0^inf (f(tau) - 1) nu_eps(d tau) for the inverse Gaussian Levy measure
// nu_eps(d tau) = delta / sqrt(2 pi) tau^{-3/2} e^{-alpha^2 tau / 2} d tau,
// substituted tau = u^2.
Complex inverse_gaussian_levy_integral(const GigMixing& g, const Vector& eig) {
  const double c = 2.0 * g.delta / std::sqrt(2.0 * std::numbers::pi);
  const double upper = std::sqrt(2.0 * 50.0) / g.alpha;
  auto f = [&](double u) -> Complex {
    if (u == 0.0) {
      return c * kI * eig.sum();
    }
    const double tau = u * u;
    return c * gaussian_quadratic_cf_minus_one(eig, tau) / tau *
           std::exp(-0.5 * g.alpha * g.alpha * tau);
  };
  const auto res = integrate_adaptive(f, 0.0, upper, exponent_quadrature());
  if (!res.converged) {
    throw Error(ErrorCode::kQuadrature, "char_exponent: Levy-measure quadrature did not converge");
  }
  return res.value;
}

double sample_mixing(const MixingLaw& law, RandomStream& rng) {
  return std::visit(Overloaded{
                        [](const ConstantMixing& c) { return c.value; },
                        [&](const GigMixing& g) {
                          if (!g.is_inverse_gaussian()) {
                            throw Error(ErrorCode::kUnsupported,
                                        "sampling GIG mixing requires nu = -1/2 (inverse Gaussian)");
                          }
                          return rng.inverse_gaussian(g.delta / g.alpha, g.delta * g.delta);
                        },
                    },
                    law);
}

std::vector<double> sorted_uniform_times(std::uint64_t n, double dt, RandomStream& rng) {
  std::vector<double> times(n);
  for (auto& t : times) t = rng.uniform() * dt;
  std::sort(times.begin(), times.end());
  return times;
}

SymMat outer(const Vector& x) { return SymMat::symmetrize(x * x.transpose()); }

}  // namespace

MixingMoments mixing_moments(const MixingLaw& law) {
  return std::visit(Overloaded{
                        [](const ConstantMixing& c) { return make_mixing_moments(c.value, 0.0); },
                        [](const GigMixing& g) { return gig_mixing_moments(g.nu, g.delta, g.alpha); },
                    },
                    law);
}

int model_dim(const SubordinatorModel& model) {
  return std::visit(Overloaded{
                        [](const DriftOnly& m) { return m.gamma.dim(); },
                        [](const DiagonalCP& m) { return static_cast<int>(m.B.rows()); },
                        [](const GaussMixtureCP& m) { return m.C.dim(); },
                        [](const TypeGbar& m) { return m.C.dim(); },
                    },
                    model);
}

const char* model_kind(const SubordinatorModel& model) {
  return std::visit(Overloaded{
                        [](const DriftOnly&) { return "drift_only"; },
                        [](const DiagonalCP&) { return "diagonal_cp"; },
                        [](const GaussMixtureCP&) { return "gauss_mixture_cp"; },
                        [](const TypeGbar&) { return "type_gbar"; },
                    },
                    model);
}

bool is_subordinator(const SubordinatorModel& model) {
  const SymMat gamma = drift_part(model);
  return psd_check(gamma, scaled_psd_tol(gamma)).has_value();
}

bool has_exact_jumps(const SubordinatorModel& model) { return !std::holds_alternative<TypeGbar>(model); }

SymMat drift_part(const SubordinatorModel& model) {
  const int d = model_dim(model);
  return std::visit(Overloaded{
                        [](const DriftOnly& m) { return m.gamma; },
                        [](const DiagonalCP& m) { return SymMat(Matrix(m.gamma.asDiagonal())); },
                        [d](const GaussMixtureCP& m) { return m.drift ? *m.drift : SymMat::zero(d); },
                        [d](const TypeGbar&) { return SymMat::zero(d); },
                    },
                    model);
}

SymMat driver_mean(const SubordinatorModel& model) {
  return std::visit(Overloaded{
                        [](const DriftOnly& m) { return m.gamma; },
                        [](const DiagonalCP& m) {
                          const Vector jumps = m.B * Vector::Ones(m.B.cols()) * (m.rate / m.jump_rate);
                          return SymMat(Matrix((m.gamma + jumps).asDiagonal()));
                        },
                        [&model](const GaussMixtureCP& m) {
                          const auto mix = mixing_moments(m.mixing);
                          return drift_part(model) + m.C.base() * (m.rate * mix.mean_eps);
                        },
                        [](const TypeGbar& m) { return m.C.base() * mixing_moments(m.mixing).mean_eps; },
                    },
                    model);
}

Matrix wishart_kernel(const Matrix& c) {
  const int d = static_cast<int>(c.rows());
  const Matrix cc = kron(c, c);
  const Vector vc = vec(c);
  return cc + commutation_matrix(d).matrix() * cc + vc * vc.transpose();
}

Matrix driver_var_vec(const SubordinatorModel& model) {
  const int d = model_dim(model);
  return std::visit(Overloaded{
                        [d](const DriftOnly&) { return Matrix(Matrix::Zero(d * d, d * d)); },
                        [d](const DiagonalCP& m) {
                          Matrix v = Matrix::Zero(d * d, d * d);
                          const Matrix c = m.B * m.B.transpose() * (2.0 * m.rate / (m.jump_rate * m.jump_rate));
                          for (int i = 0; i < d; ++i)
                            for (int j = 0; j < d; ++j) v(i * (d + 1), j * (d + 1)) = c(i, j);
                          return v;
                        },
                        [](const GaussMixtureCP& m) {
                          return Matrix(m.rate * mixing_moments(m.mixing).second_moment_eps *
                                        wishart_kernel(m.C.matrix()));
                        },
                        [](const TypeGbar& m) {
                          return Matrix(mixing_moments(m.mixing).var_eps * wishart_kernel(m.C.matrix()));
                        },
                    },
                    model);
}

void validate_model(const SubordinatorModel& model) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  auto check_mixing = [&](const MixingLaw& law) {
    std::visit(Overloaded{
                   [&](const ConstantMixing& c) {
                     if (!(c.value >= 0.0) || !std::isfinite(c.value)) fail("constant mixing value must be >= 0");
                   },
                   [&](const GigMixing& g) {
                     if (!(g.delta > 0.0) || !(g.alpha > 0.0) || !std::isfinite(g.nu)) {
                       fail("gig mixing requires delta > 0 and alpha > 0");
                     }
                   },
               },
               law);
  };
  std::visit(Overloaded{
                 [](const DriftOnly&) {},
                 [&](const DiagonalCP& m) {
                   if (m.B.rows() < 1 || m.B.cols() < 1) fail("diagonal_cp: B must be non-empty");
                   if (m.gamma.size() != m.B.rows()) fail("diagonal_cp: gamma length must equal rows of B");
                   if ((m.B.array() < 0.0).any()) fail("diagonal_cp: B must be entrywise nonnegative");
                   if ((m.gamma.array() < 0.0).any()) fail("diagonal_cp: gamma must be nonnegative");
                   if (!(m.rate > 0.0) || !(m.jump_rate > 0.0)) fail("diagonal_cp: rate and jump_rate must be > 0");
                 },
                 [&](const GaussMixtureCP& m) {
                   if (!(m.rate > 0.0)) fail("gauss_mixture_cp: rate must be > 0");
                   if (m.drift && m.drift->dim() != m.C.dim()) fail("gauss_mixture_cp: drift dimension mismatch");
                   check_mixing(m.mixing);
                 },
                 [&](const TypeGbar& m) {
                   check_mixing(m.mixing);
                   if (m.substeps < 1) fail("type_gbar: substeps must be >= 1");
                 },
             },
             model);
}

Increment sample_increment(const SubordinatorModel& model, double dt, RandomStream& rng) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sample_increment: dt must be > 0");
  const int d = model_dim(model);
  Increment inc{drift_part(model) * dt, {}};
  std::visit(
      Overloaded{
          [](const DriftOnly&) {},
          [&](const DiagonalCP& m) {
            const auto k = static_cast<std::uint64_t>(m.B.cols());
            const std::uint64_t n = rng.poisson(static_cast<double>(k) * m.rate * dt);
            for (double t : sorted_uniform_times(n, dt, rng)) {
              const auto col = std::min<std::uint64_t>(static_cast<std::uint64_t>(rng.uniform() * k), k - 1);
              const double size = rng.exponential(m.jump_rate);
              const Vector diag = m.B.col(static_cast<Eigen::Index>(col)) * size;
              inc.jumps.push_back(Jump{t, SymMat(Matrix(diag.asDiagonal()))});
            }
          },
          [&](const GaussMixtureCP& m) {
            const std::uint64_t n = rng.poisson(m.rate * dt);
            if (n == 0) return;
            const Matrix root = m.C.sqrt();
            for (double t : sorted_uniform_times(n, dt, rng)) {
              const double eps = sample_mixing(m.mixing, rng);
              Vector z(d);
              for (int i = 0; i < d; ++i) z(i) = rng.normal();
              inc.jumps.push_back(Jump{t, outer(std::sqrt(eps) * (root * z))});
            }
          },
          [&](const TypeGbar& m) {
            if (!m.mixing.is_inverse_gaussian()) {
              throw Error(ErrorCode::kUnsupported, "type_gbar simulation requires inverse Gaussian mixing");
            }
            const Matrix root = m.C.sqrt();
            const double h = dt / m.substeps;
            const double mean = m.mixing.delta * h / m.mixing.alpha;
            const double shape = (m.mixing.delta * h) * (m.mixing.delta * h);
            Matrix qv = Matrix::Zero(d, d);
            for (int s = 0; s < m.substeps; ++s) {
              const double eps = rng.inverse_gaussian(mean, shape);
              Vector z(d);
              for (int i = 0; i < d; ++i) z(i) = rng.normal();
              const Vector x = std::sqrt(eps) * (root * z);
              qv += x * x.transpose();
            }
            inc.jumps.push_back(Jump{dt, SymMat::symmetrize(qv)});
          },
      },
      model);
  for (const auto& j : inc.jumps) inc.value += j.matrix;
  return inc;
}

ExponentValue char_exponent(const SubordinatorModel& model, const SymMat& z) {
  if (z.dim() != model_dim(model)) throw Error(ErrorCode::kDimensionMismatch, "char_exponent: dimension mismatch");
  const Complex drift_term = kI * (drift_part(model).matrix() * z.matrix()).trace();
  return std::visit(
      Overloaded{
          [&](const DriftOnly&) { return ExponentValue{drift_term, ExponentMode::kExact, 0.0}; },
          [&](const DiagonalCP& m) {
            Complex sum = 0.0;
            const Vector zdiag = z.matrix().diagonal();
            for (Eigen::Index j = 0; j < m.B.cols(); ++j) {
              const double s = m.B.col(j).dot(zdiag);
              sum += m.jump_rate / (m.jump_rate - kI * s) - 1.0;
            }
            return ExponentValue{drift_term + m.rate * sum, ExponentMode::kExact, 0.0};
          },
          [&](const GaussMixtureCP& m) {
            const Vector eig = whitened_eigenvalues(m.C, z);
            return std::visit(
                Overloaded{
                    [&](const ConstantMixing& c) {
                      return ExponentValue{drift_term + m.rate * gaussian_quadratic_cf_minus_one(eig, c.value),
                                           ExponentMode::kExact, 0.0};
                    },
                    [&](const GigMixing& g) {
                      return ExponentValue{drift_term + m.rate * gig_expectation_minus_one(g, eig),
                                           ExponentMode::kQuadrature, 0.0};
                    },
                },
                m.mixing);
          },
          [&](const TypeGbar& m) {
            if (!m.mixing.is_inverse_gaussian()) {
              throw Error(ErrorCode::kUnsupported,
                          "char_exponent: type_gbar exponent available only for inverse Gaussian mixing; "
                          "use char_exponent_mc");
            }
            const Vector eig = whitened_eigenvalues(m.C, z);
            return ExponentValue{inverse_gaussian_levy_integral(m.mixing, eig), ExponentMode::kQuadrature, 0.0};
          },
      },
      model);
}

ExponentValue char_exponent_mc(const SubordinatorModel& model, const SymMat& z, int n, RandomStream& rng) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "char_exponent_mc: n must be >= 2");
  Complex sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Increment inc = sample_increment(model, 1.0, rng);
    const Complex v = std::exp(kI * (inc.value.matrix() * z.matrix()).trace());
    sum += v;
    sum_sq += std::norm(v);
  }
  const Complex mean = sum / static_cast<double>(n);
  const double var = (sum_sq / n - std::norm(mean)) * n / (n - 1.0);
  const double se_mean = std::sqrt(std::max(var, 0.0) / n);
  return ExponentValue{std::log(mean), ExponentMode::kMonteCarlo, se_mean / std::abs(mean)};
}

SymMat discrete_qv(const std::vector<Vector>& jumps, int d) {
  Matrix qv = Matrix::Zero(d, d);
  for (const auto& x : jumps) {
    if (x.size() != d) throw Error(ErrorCode::kDimensionMismatch, "discrete_qv: jump dimension mismatch");
    qv += x * x.transpose();
  }
  return SymMat::symmetrize(qv);
}

QvMoments mixture_qv_moments(QvKind kind, double rate, const MixingMoments& mix, const PsdMat& c) {
  const Matrix kernel = wishart_kernel(c.matrix());
  if (kind == QvKind::kCompoundPoisson) {
    if (!(rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mixture_qv_moments: rate must be > 0");
    return QvMoments{c.base() * (rate * mix.mean_eps), rate * mix.second_moment_eps * kernel};
  }
  return QvMoments{c.base() * mix.mean_eps, mix.var_eps * kernel};
}

SubordinatorModel build_multivariate_subordinator(const Vector& mu, const Matrix& b) {
  const int d = static_cast<int>(mu.size());
  if (d < 1 || b.rows() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "build_multivariate_subordinator: B must have d rows");
  }
  if ((mu.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "build_multivariate_subordinator: mu entries must be > 0");
  }
  if ((b.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "build_multivariate_subordinator: B must be nonnegative");
  }
  if (b.size() == 0 || b.isZero(0.0)) {
    return DriftOnly{SymMat(Matrix(mu.asDiagonal()))};
  }
  const Vector row_sums = b * Vector::Ones(b.cols());
  double lambda = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    if (row_sums(i) > 0.0) lambda = std::min(lambda, mu(i) / row_sums(i));
  }
  // Exp(lambda) jumps at rate lambda^2/2 give each component mean lambda/2
  // and unit variance.
  const double rate = 0.5 * lambda * lambda;
  Vector gamma = mu - 0.5 * lambda * row_sums;
  return DiagonalCP{b, rate, lambda, gamma};
}

}  // namespace psou
