#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "psou/cp_factor.hpp"
#include "psou/subordinators.hpp"
#include "test_util.hpp"

using namespace psou;
using Complex = std::complex<double>;
using psou::testing::random_matrix;
using psou::testing::random_sym;

namespace {

const Complex kI(0.0, 1.0);

PsdMat psd(const Matrix& m) { return require_psd(SymMat::symmetrize(m)); }

Matrix c2() {
  Matrix c(2, 2);
  c << 1.0, 0.3, 0.3, 0.5;
  return c;
}

struct VecMoments {
  Vector mean, mean_se;
  Matrix var, var_se;
};

// Sample mean and covariance of vec(L_dt) with per-entry standard errors.
VecMoments vec_moments(const SubordinatorModel& model, double dt, int n, std::uint64_t seed) {
  RandomStream rng(seed);
  const int d = model_dim(model), dd = d * d;
  std::vector<Vector> xs;
  xs.reserve(n);
  Vector sum = Vector::Zero(dd);
  for (int i = 0; i < n; ++i) {
    xs.push_back(vec(sample_increment(model, dt, rng).value.matrix()));
    sum += xs.back();
  }
  VecMoments m;
  m.mean = sum / n;
  Matrix s1 = Matrix::Zero(dd, dd), s2 = Matrix::Zero(dd, dd);
  Vector v = Vector::Zero(dd);
  for (const auto& x : xs) {
    const Vector e = x - m.mean;
    const Matrix p = e * e.transpose();
    s1 += p;
    s2 += p.cwiseProduct(p);
    v += e.cwiseProduct(e);
  }
  m.var = s1 / n;
  m.var_se = ((s2 / n - m.var.cwiseProduct(m.var)).cwiseMax(0.0) / n).cwiseSqrt();
  m.mean_se = (v / n / n).cwiseSqrt();
  return m;
}

void expect_within_se(const Matrix& emp, const Matrix& truth, const Matrix& se, double k, const char* what) {
  for (Eigen::Index i = 0; i < emp.size(); ++i) {
    if (se(i) == 0.0) {
      EXPECT_NEAR(emp(i), truth(i), 1e-12) << what << " entry " << i;
    } else {
      EXPECT_LE(std::abs(emp(i) - truth(i)), k * se(i)) << what << " entry " << i << ": " << emp(i) << " vs "
                                                        << truth(i);
    }
  }
}

// int_0^inf f(x) dx for complex f by real and imaginary parts.
template <class F>
Complex integrate_complex(F f) {
  boost::math::quadrature::exp_sinh<double> q;
  auto safe = [&](double x, bool re) {
    if (!(x > 0.0) || !std::isfinite(x)) return 0.0;
    const Complex v = f(x);
    return re ? v.real() : v.imag();
  };
  return {q.integrate([&](double x) { return safe(x, true); }),
          q.integrate([&](double x) { return safe(x, false); })};
}

}  // namespace

TEST(SampleIncrement, DriftOnly) {
  RandomStream rng(1);
  const Increment inc = sample_increment(DriftOnly{SymMat::identity(2)}, 0.5, rng);
  EXPECT_EQ(inc.value, SymMat::identity(2) * 0.5);
  EXPECT_TRUE(inc.jumps.empty());
}

TEST(SampleIncrement, GaussMixtureJumpsAreRankOne) {
  RandomStream rng(2);
  const GaussMixtureCP m{1.0, psd(Matrix::Identity(3, 3)), ConstantMixing{1.0}, std::nullopt};
  long jumps = 0;
  for (int i = 0; i < 2000; ++i) {
    const Increment inc = sample_increment(m, 1.0, rng);
    for (const auto& j : inc.jumps) {
      const Vector ev = j.matrix.eigenvalues();
      EXPECT_GE(ev(0), -1e-12);
      EXPECT_LE(std::abs(ev(1)), 1e-12 * (1.0 + ev(2)));  // rank one
      EXPECT_GT(j.time, 0.0);
      EXPECT_LE(j.time, 1.0);
    }
    jumps += static_cast<long>(inc.jumps.size());
  }
  EXPECT_NEAR(jumps / 2000.0, 1.0, 5.0 * std::sqrt(1.0 / 2000.0));
}

TEST(SampleIncrement, RejectsNonPositiveDt) {
  RandomStream rng(3);
  EXPECT_THROW(sample_increment(DriftOnly{SymMat::identity(2)}, 0.0, rng), Error);
}

TEST(SampleIncrement, AllFamiliesPsd) {
  RandomStream rng(4);
  const std::vector<SubordinatorModel> models{
      build_multivariate_subordinator(Vector::Constant(2, 1.0), Matrix(c2().cwiseAbs())),
      GaussMixtureCP{3.0, psd(c2()), ConstantMixing{2.0}, std::nullopt},
      GaussMixtureCP{3.0, psd(c2()), GigMixing{-0.5, 1.0, 0.7}, std::nullopt},
      TypeGbar{psd(c2()), GigMixing{-0.5, 1.0, 1.0}, 16},
  };
  for (const auto& m : models) {
    for (int i = 0; i < 2000; ++i) {
      EXPECT_GE(sample_increment(m, 0.3, rng).value.min_eigenvalue(), -1e-10) << model_kind(m);
    }
  }
}

TEST(SampleIncrement, GaussMixtureMomentsMonteCarlo) {
  const GaussMixtureCP m{1.0, psd(c2()), ConstantMixing{1.0}, std::nullopt};
  const VecMoments mc = vec_moments(m, 1.0, 400000, 5);
  expect_within_se(mc.mean, vec(driver_mean(m).matrix()), mc.mean_se, 4.0, "mean");
  expect_within_se(mc.var, driver_var_vec(m), mc.var_se, 4.0, "var");
}

TEST(SampleIncrement, InverseGaussianMixtureMomentsMonteCarlo) {
  const GaussMixtureCP m{2.0, psd(c2()), GigMixing{-0.5, 1.2, 1.5}, std::nullopt};
  const VecMoments mc = vec_moments(m, 1.0, 300000, 6);
  expect_within_se(mc.mean, vec(driver_mean(m).matrix()), mc.mean_se, 4.0, "mean");
  expect_within_se(mc.var, driver_var_vec(m), mc.var_se, 4.0, "var");
}

TEST(SampleIncrement, MomentsScaleLinearlyInTime) {
  const SubordinatorModel m = build_multivariate_subordinator(Vector::Constant(2, 1.5), Matrix(c2()));
  const double dt = 0.4;
  const VecMoments mc = vec_moments(m, dt, 100000, 7);
  expect_within_se(mc.mean, dt * vec(driver_mean(m).matrix()), mc.mean_se, 4.0, "mean");
  expect_within_se(mc.var, dt * driver_var_vec(m), mc.var_se, 4.0, "var");
}

TEST(SampleIncrement, TypeGbarSubgridMoments) {
  // The sampler sums n squared NIG increments over a subgrid of step h: its
  // mean is exact and its variance is delta/alpha^3 kernel(C) plus
  // (delta^2 h / alpha^2)(I + K)(C (x) C).
  const double delta = 1.0, alpha = 1.3;
  const int n = 8;
  const TypeGbar m{psd(c2()), GigMixing{-0.5, delta, alpha}, n};
  const VecMoments mc = vec_moments(m, 1.0, 200000, 8);
  const Matrix cc = kron(c2(), c2());
  const Matrix k = commutation_matrix(2).matrix();
  const Matrix var = driver_var_vec(m) + delta * delta / (n * alpha * alpha) * (cc + k * cc);
  expect_within_se(mc.mean, vec(driver_mean(m).matrix()), mc.mean_se, 4.0, "mean");
  expect_within_se(mc.var, var, mc.var_se, 4.0, "var");
  EXPECT_FALSE(has_exact_jumps(m));
}

TEST(SampleIncrement, TypeGbarGeneralGigUnsupported) {
  RandomStream rng(9);
  const TypeGbar m{psd(c2()), GigMixing{1.0, 1.0, 1.0}, 16};
  try {
    sample_increment(m, 1.0, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
  EXPECT_THROW(char_exponent(m, SymMat::identity(2)), Error);
  // Moments stay available.
  EXPECT_NO_THROW(driver_var_vec(m));
}

TEST(CharExponent, ZeroArgument) {
  const std::vector<SubordinatorModel> models{
      DriftOnly{SymMat(c2())},
      build_multivariate_subordinator(Vector::Constant(2, 1.0), Matrix(c2())),
      GaussMixtureCP{1.0, psd(c2()), ConstantMixing{1.0}, std::nullopt},
      GaussMixtureCP{1.0, psd(c2()), GigMixing{0.7, 1.0, 1.0}, std::nullopt},
      TypeGbar{psd(c2()), GigMixing{-0.5, 1.0, 1.0}, 16},
  };
  for (const auto& m : models) EXPECT_LT(std::abs(char_exponent(m, SymMat::zero(2)).value), 1e-14);
}

TEST(CharExponent, DriftOnlyIsLinear) {
  std::mt19937_64 g(10);
  const SymMat gamma = random_sym(g, 3), z = random_sym(g, 3);
  const ExponentValue v = char_exponent(DriftOnly{gamma}, z);
  EXPECT_NEAR(std::abs(v.value - kI * (gamma.matrix() * z.matrix()).trace()), 0.0, 1e-15);
  EXPECT_EQ(v.mode, ExponentMode::kExact);
}

TEST(CharExponent, ScalarGaussianQuadraticForm) {
  const GaussMixtureCP m{1.0, psd(Matrix::Identity(1, 1)), ConstantMixing{1.0}, std::nullopt};
  for (double z : {-3.0, -0.2, 1e-9, 0.4, 5.0}) {
    const Complex expected = std::pow(1.0 - 2.0 * kI * z, -0.5) - 1.0;
    const Complex got = char_exponent(m, SymMat(Matrix::Constant(1, 1, z))).value;
    EXPECT_LT(std::abs(got - expected), 1e-14 * (1.0 + std::abs(expected))) << z;
  }
}

TEST(CharExponent, DiagonalCpClosedForm) {
  // One component: rate r, Exp(lambda) jumps along column b, drift gamma.
  Matrix b(2, 1);
  b << 0.5, 1.5;
  Vector gamma(2);
  gamma << 0.2, 0.1;
  const DiagonalCP m{b, 0.8, 2.0, gamma};
  Matrix z(2, 2);
  z << 0.3, 0.7, 0.7, -0.4;
  const double s = 0.5 * 0.3 + 1.5 * -0.4;
  const Complex expected = kI * (0.2 * 0.3 + 0.1 * -0.4) + 0.8 * (2.0 / (2.0 - kI * s) - 1.0);
  EXPECT_LT(std::abs(char_exponent(m, SymMat(z)).value - expected), 1e-15);
}

TEST(CharExponent, GigMixingAgainstQuadratureOracle) {
  const double nu = 0.8, delta = 1.1, alpha = 0.9, rate = 1.7, c = 0.6, z = 0.45;
  const GaussMixtureCP m{rate, psd(Matrix::Constant(1, 1, c)), GigMixing{nu, delta, alpha}, std::nullopt};
  const Complex oracle = rate * integrate_complex([&](double e) {
    return (std::pow(1.0 - 2.0 * kI * e * c * z, -0.5) - 1.0) * std::exp(gig_log_density(nu, delta, alpha, e));
  });
  const ExponentValue v = char_exponent(m, SymMat(Matrix::Constant(1, 1, z)));
  EXPECT_EQ(v.mode, ExponentMode::kQuadrature);
  EXPECT_LT(std::abs(v.value - oracle), 1e-8 * (1.0 + std::abs(oracle)));
}

TEST(CharExponent, TypeGbarNigAgainstLevyMeasureOracle) {
  // Levy density of the inverse Gaussian subordinator:
  // delta / sqrt(2 pi) t^{-3/2} exp(-alpha^2 t / 2).
  const double delta = 0.9, alpha = 1.4, z = -0.7;
  const TypeGbar m{psd(Matrix::Identity(1, 1)), GigMixing{-0.5, delta, alpha}, 16};
  const Complex oracle = integrate_complex([&](double t) {
    return (std::pow(1.0 - 2.0 * kI * t * z, -0.5) - 1.0) * delta / std::sqrt(2.0 * std::numbers::pi) *
           std::pow(t, -1.5) * std::exp(-0.5 * alpha * alpha * t);
  });
  const ExponentValue v = char_exponent(m, SymMat(Matrix::Constant(1, 1, z)));
  EXPECT_LT(std::abs(v.value - oracle), 1e-7 * (1.0 + std::abs(oracle)));
}

TEST(CharExponent, MonteCarloAgreesWithExact) {
  const GaussMixtureCP m{1.5, psd(c2()), ConstantMixing{1.0}, std::nullopt};
  Matrix zm(2, 2);
  zm << 0.4, -0.2, -0.2, 0.9;
  const SymMat z(zm);
  RandomStream rng(11);
  const ExponentValue mc = char_exponent_mc(m, z, 200000, rng);
  const ExponentValue exact = char_exponent(m, z);
  EXPECT_EQ(mc.mode, ExponentMode::kMonteCarlo);
  EXPECT_GT(mc.std_error, 0.0);
  EXPECT_LT(std::abs(mc.value - exact.value), 5.0 * mc.std_error);
}

TEST(CharExponent, DerivativeAtZeroIsMean) {
  // d/ds psi(s Z) at 0 = i tr(E(L_1) Z)
  const GaussMixtureCP m{1.3, psd(c2()), GigMixing{0.4, 1.0, 2.0}, SymMat::identity(2) * 0.2};
  Matrix zm(2, 2);
  zm << 0.5, 0.1, 0.1, -0.3;
  const SymMat z(zm);
  const double h = 1e-4;
  const Complex d = (char_exponent(m, z * h).value - char_exponent(m, z * -h).value) / (2.0 * h);
  EXPECT_LT(std::abs(d - kI * (driver_mean(m).matrix() * zm).trace()), 1e-6);
}

TEST(DiscreteQv, Examples) {
  EXPECT_EQ(discrete_qv({}, 2), SymMat::zero(2));
  Vector x(2), y(2);
  x << 1.0, 0.0;
  y << 1.0, 1.0;
  Matrix expected(2, 2);
  expected << 2.0, 1.0, 1.0, 1.0;
  EXPECT_EQ(discrete_qv({x, y}, 2).matrix(), expected);
  const SymMat one = discrete_qv({y}, 2);
  EXPECT_NEAR(one.eigenvalues()(0), 0.0, 1e-15);
}

TEST(DiscreteQv, RankAndTrace) {
  std::mt19937_64 g(12);
  std::vector<Vector> jumps;
  double sq = 0.0;
  for (int i = 0; i < 3; ++i) {
    jumps.push_back(random_matrix(g, 5, 1).col(0));
    sq += jumps.back().squaredNorm();
  }
  const SymMat q = discrete_qv(jumps, 5);
  EXPECT_NEAR(q.trace(), sq, 1e-13);
  const Vector ev = q.eigenvalues();
  EXPECT_LT(std::abs(ev(0)) + std::abs(ev(1)), 1e-12);  // rank <= 3
}

TEST(MixtureQv, EqualIdentityKernel) {
  for (int d : {2, 3}) {
    const QvMoments m =
        mixture_qv_moments(QvKind::kCompoundPoisson, 1.0, make_mixing_moments(1.0, 0.0), psd(Matrix::Identity(d, d)));
    const Vector vi = vec(Matrix::Identity(d, d));
    const Matrix expected = Matrix::Identity(d * d, d * d) + commutation_matrix(d).matrix() + vi * vi.transpose();
    EXPECT_EQ(m.var, expected);
    EXPECT_EQ(m.mean, SymMat::identity(d));
  }
}

TEST(MixtureQv, TypeGbarNig) {
  const MixingMoments mix = gig_mixing_moments(-0.5, 1.0, 1.0);
  const QvMoments m = mixture_qv_moments(QvKind::kTypeGbar, 0.0, mix, psd(c2()));
  EXPECT_LT(max_abs_diff(m.mean.matrix(), c2()), 1e-15);
  EXPECT_LT(max_abs_diff(m.var, wishart_kernel(c2())), 1e-15);
}

TEST(MixtureQv, VarianceSymmetricPsd) {
  std::mt19937_64 g(13);
  for (int d = 1; d <= 4; ++d) {
    const PsdMat c = psou::testing::random_psd(g, d, 0.0);
    const QvMoments m = mixture_qv_moments(QvKind::kCompoundPoisson, 2.0, make_mixing_moments(0.7, 0.3), c);
    EXPECT_LT((m.var - m.var.transpose()).norm(), 1e-14);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(m.var).eigenvalues()(0), -1e-10);
  }
  EXPECT_THROW(mixture_qv_moments(QvKind::kCompoundPoisson, 0.0, make_mixing_moments(1.0, 0.0), psd(c2())),
               Error);
}

TEST(MultivariateSubordinator, ScalarExample) {
  const SubordinatorModel m = build_multivariate_subordinator(Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 1.0));
  const auto& cp = std::get<DiagonalCP>(m);
  EXPECT_DOUBLE_EQ(cp.jump_rate, 2.0);
  EXPECT_DOUBLE_EQ(cp.rate, 2.0);
  EXPECT_DOUBLE_EQ(cp.gamma(0), 1.0);
  // E = rate/lambda + gamma, var = 2 rate / lambda^2
  EXPECT_DOUBLE_EQ(driver_mean(m)(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(driver_var_vec(m)(0, 0), 1.0);
}

TEST(MultivariateSubordinator, ZeroCovarianceIsDrift) {
  Vector mu(2);
  mu << 1.0, 3.0;
  const SubordinatorModel m = build_multivariate_subordinator(mu, SymMat::zero(2));
  ASSERT_TRUE(std::holds_alternative<DriftOnly>(m));
  EXPECT_EQ(driver_mean(m).matrix().diagonal(), mu);
  EXPECT_EQ(driver_var_vec(m).norm(), 0.0);
}

TEST(MultivariateSubordinator, MomentsAndPositiveDrift) {
  std::mt19937_64 g(14);
  for (int n = 0; n < 20; ++n) {
    const int d = 1 + n % 4;
    const Matrix b = random_matrix(g, d, 1 + n % 3, 0.0, 1.0);
    const Vector mu = random_matrix(g, d, 1, 0.1, 2.0).col(0);
    const SubordinatorModel m = build_multivariate_subordinator(mu, b);
    const auto& cp = std::get<DiagonalCP>(m);
    EXPECT_GT(cp.gamma.minCoeff(), -1e-15);
    EXPECT_LT((driver_mean(m).matrix().diagonal() - mu).norm(), 1e-13);
    const Matrix v = driver_var_vec(m);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) EXPECT_NEAR(v(i * (d + 1), j * (d + 1)), (b * b.transpose())(i, j), 1e-13);
  }
}

TEST(MultivariateSubordinator, Errors) {
  EXPECT_THROW(build_multivariate_subordinator(Vector::Constant(2, -1.0), Matrix::Identity(2, 2)), Error);
  EXPECT_THROW(build_multivariate_subordinator(Vector::Constant(2, 1.0), Matrix(-Matrix::Identity(2, 2))), Error);
  EXPECT_THROW(build_multivariate_subordinator(Vector::Constant(3, 1.0), Matrix::Identity(2, 2)), Error);
  Matrix neg(2, 2);
  neg << 1.0, -0.2, -0.2, 1.0;
  try {
    build_multivariate_subordinator(Vector::Constant(2, 1.0), SymMat(neg));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPsd);
  }
}

TEST(Models, SubordinatorFlagAndValidation) {
  Matrix g(2, 2);
  g << 1.0, 2.0, 2.0, 1.0;
  EXPECT_FALSE(is_subordinator(DriftOnly{SymMat(g)}));
  EXPECT_TRUE(is_subordinator(DriftOnly{SymMat::identity(2)}));
  EXPECT_FALSE(is_subordinator(GaussMixtureCP{1.0, psd(c2()), ConstantMixing{1.0}, SymMat(g)}));
  EXPECT_THROW(validate_model(GaussMixtureCP{-1.0, psd(c2()), ConstantMixing{1.0}, std::nullopt}), Error);
  EXPECT_THROW(validate_model(GaussMixtureCP{1.0, psd(c2()), GigMixing{0.0, -1.0, 1.0}, std::nullopt}), Error);
  EXPECT_THROW(validate_model(DiagonalCP{Matrix::Identity(2, 2), 1.0, 1.0, Vector::Constant(3, 0.0)}), Error);
  EXPECT_EQ(std::string(model_kind(TypeGbar{psd(c2()), GigMixing{}, 16})), "type_gbar");
}
