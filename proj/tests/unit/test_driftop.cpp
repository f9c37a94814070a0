#include <gtest/gtest.h>

#include <cmath>

#include "psou/driftop.hpp"
#include "test_util.hpp"

using namespace psou;
using psou::testing::random_matrix;
using psou::testing::random_psd;
using psou::testing::random_stable;
using psou::testing::random_sym;

namespace {

Matrix counterexample_a() {
  Matrix a(2, 2);
  a << -0.1, -1.0 / 3.0, -1.0 / 3.0, -2.0;
  return a;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kConfig;
}

}  // namespace

TEST(ApplyDrift, TrivialCases) {
  std::mt19937_64 g(1);
  const SymMat x = random_sym(g, 3);
  EXPECT_LT((apply_drift(DriftOperator(Matrix::Identity(3, 3)), x) - 2.0 * x).frobenius_norm(), 1e-15);
  EXPECT_EQ(apply_drift(DriftOperator(Matrix::Zero(3, 3)), x), SymMat::zero(3));
}

TEST(ApplyDrift, CounterexampleDriftOnIdentity) {
  Matrix expected(2, 2);
  expected << -0.2, -2.0 / 3.0, -2.0 / 3.0, -4.0;
  const SymMat r = apply_drift(DriftOperator(counterexample_a()), SymMat::identity(2));
  EXPECT_LT(max_abs_diff(r.matrix(), expected), 1e-15);
}

TEST(ApplyDrift, DimensionMismatch) {
  EXPECT_EQ(code_of([] { apply_drift(DriftOperator(Matrix::Identity(2, 2)), SymMat::identity(3)); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_THROW(DriftOperator(Matrix::Zero(2, 3)), Error);
}

TEST(Semigroup, TimeZeroIsIdentity) {
  std::mt19937_64 g(2);
  const SymMat x = random_sym(g, 3);
  EXPECT_LT((semigroup_apply(DriftOperator(random_matrix(g, 3, 3)), 0.0, x) - x).frobenius_norm(), 1e-15);
}

TEST(Semigroup, DiagonalClosedForm) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = -0.3;
  a(1, 1) = 0.7;
  Matrix x(2, 2);
  x << 1.0, 2.0, 2.0, 3.0;
  const double t = 1.3;
  const SymMat r = semigroup_apply(DriftOperator(a), t, SymMat(x));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(r(i, j), x(i, j) * std::exp((a(i, i) + a(j, j)) * t), 1e-14);
}

TEST(Semigroup, LawAndPsdPreservation) {
  std::mt19937_64 g(3);
  for (int n = 0; n < 100; ++n) {
    const int d = 1 + n % 4;
    const DriftOperator op(random_matrix(g, d, d, -2.0, 2.0));
    const SymMat x = random_psd(g, d, 0.0).base();
    const double s = 0.5 * (n % 3), t = -0.4 + 0.1 * (n % 7);
    const SymMat lhs = semigroup_apply(op, s, semigroup_apply(op, t, x));
    const SymMat rhs = semigroup_apply(op, s + t, x);
    EXPECT_LT((lhs - rhs).frobenius_norm(), 1e-10 * (1.0 + rhs.frobenius_norm()));
    EXPECT_GE(semigroup_apply(op, t, x).min_eigenvalue(), -1e-10);
  }
}

TEST(Semigroup, DerivativeAtZeroIsDrift) {
  std::mt19937_64 g(4);
  const DriftOperator op(random_matrix(g, 3, 3));
  const SymMat x = random_sym(g, 3);
  const double h = 1e-5;
  const SymMat fd = (semigroup_apply(op, h, x) - semigroup_apply(op, -h, x)) * (0.5 / h);
  EXPECT_LT((fd - apply_drift(op, x)).frobenius_norm(), 1e-8);
}

TEST(Generator, TrivialCases) {
  EXPECT_EQ(generator_matrix(DriftOperator(Matrix::Constant(1, 1, -0.3)))(0, 0), -0.6);
  EXPECT_EQ(generator_matrix(DriftOperator(Matrix::Identity(2, 2))), 2.0 * Matrix::Identity(4, 4));
}

TEST(Generator, VecRepresentationAndExponential) {
  std::mt19937_64 g(5);
  for (int d = 1; d <= 4; ++d) {
    const DriftOperator op(random_matrix(g, d, d));
    const SymMat x = random_sym(g, d);
    EXPECT_LT((generator_matrix(op) * vec(x.matrix()) - vec(apply_drift(op, x).matrix())).norm(), 1e-13);
    const double t = 0.6;
    const Matrix e = matrix_exponential(op.A(), t);
    EXPECT_LT((matrix_exponential(generator_matrix(op), t) - kron(e, e)).norm(), 1e-12 * kron(e, e).norm());
  }
}

TEST(Solve, NegativeHalfIdentity) {
  std::mt19937_64 g(6);
  const SymMat y = random_sym(g, 3);
  const SymMat x = DriftOperator(-0.5 * Matrix::Identity(3, 3)).solve(y);
  EXPECT_LT((x + y).frobenius_norm(), 1e-14);
}

TEST(Solve, RoundTripRandomStable) {
  std::mt19937_64 g(7);
  for (int n = 0; n < 40; ++n) {
    const int d = 1 + n % 4;
    const DriftOperator op(random_stable(g, d));
    const SymMat y = random_sym(g, d);
    const SymMat x = op.solve(y);
    EXPECT_LT((op.apply(x) - y).frobenius_norm(), 1e-10 * (1.0 + y.frobenius_norm()));
    EXPECT_LT((op.solve(op.apply(y)) - y).frobenius_norm(), 1e-10 * (1.0 + y.frobenius_norm()));
  }
}

TEST(Solve, BigLevelRoundTrip) {
  std::mt19937_64 g(8);
  const DriftOperator op(random_stable(g, 2));
  const Matrix w = random_sym(g, 4).matrix();
  const Matrix v = op.solve_big(w);
  const Matrix gen = op.generator();
  EXPECT_LT((gen * v + v * gen.transpose() - w).norm(), 1e-10 * (1.0 + w.norm()));
  const DriftSolution s = solve_drift_equation(op, w, SolveLevel::kBig);
  EXPECT_LT((s.big - v).norm(), 1e-14);
}

TEST(Solve, SingularOperator) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1.0;
  const DriftOperator op(a);
  EXPECT_EQ(code_of([&] { op.solve(SymMat::identity(2)); }), ErrorCode::kSingularOperator);
}

TEST(Stability, CounterexampleSpectrum) {
  const StabilityReport r = stability_margin(DriftOperator(counterexample_a()));
  ASSERT_EQ(r.spectrum.size(), 2u);
  EXPECT_NEAR(r.spectrum[0].real(), -21.0 / 20.0 - std::sqrt(3649.0) / 60.0, 1e-12);
  EXPECT_NEAR(r.spectrum[1].real(), -21.0 / 20.0 + std::sqrt(3649.0) / 60.0, 1e-12);
  EXPECT_NEAR(r.margin, -0.043, 5e-4);
  EXPECT_TRUE(r.stable);
}

TEST(Stability, UnstableAndMarginal) {
  EXPECT_FALSE(stability_margin(DriftOperator(Matrix::Identity(2, 2))).stable);
  EXPECT_DOUBLE_EQ(stability_margin(DriftOperator(Matrix::Identity(2, 2))).margin, 1.0);
  Matrix rot(2, 2);
  rot << 0.0, -1.0, 1.0, 0.0;
  const StabilityReport r = stability_margin(DriftOperator(rot));
  EXPECT_NEAR(r.margin, 0.0, 1e-15);
  EXPECT_FALSE(r.stable);
}

TEST(RecoverFromBasis, IdentityCase) {
  std::vector<SymMat> images{2.0 * SymMat::basis(2, 0, 0), 2.0 * SymMat::basis(2, 1, 1)};
  EXPECT_EQ(recover_from_basis_action(images).A(), Matrix::Identity(2, 2));
}

TEST(RecoverFromBasis, ExactRoundTrip) {
  std::mt19937_64 g(9);
  for (int d = 1; d <= 5; ++d) {
    const DriftOperator op(random_matrix(g, d, d, -3.0, 3.0));
    std::vector<SymMat> images;
    for (int i = 0; i < d; ++i) images.push_back(op.apply(SymMat::basis(d, i, i)));
    EXPECT_LT(max_abs_diff(recover_from_basis_action(images).A(), op.A()), 1e-15);
  }
}

TEST(RecoverFromBasis, InconsistentImages) {
  std::vector<SymMat> images{SymMat::identity(2), SymMat::identity(2)};  // (1,1) entry of image 0 must vanish
  EXPECT_THROW(recover_from_basis_action(images), Error);
  std::vector<SymMat> wrong_count{SymMat::identity(2)};
  EXPECT_THROW(recover_from_basis_action(wrong_count), Error);
}

TEST(Extract, ZeroDrift) {
  const SemigroupProbe probe = [](double, const SymMat& x) { return x; };
  const ExtractionResult r = extract_generator(probe, 3);
  EXPECT_LT(r.op.A().norm(), 1e-10);
}

TEST(Extract, CounterexampleDrift) {
  const DriftOperator truth(counterexample_a());
  const SemigroupProbe probe = [&](double t, const SymMat& x) { return truth.semigroup(t, x); };
  const ExtractionResult r = extract_generator(probe, 2);
  EXPECT_LT((r.op.A() - truth.A()).norm(), 1e-5 * (1.0 + truth.A().norm()));
  EXPECT_LT(r.representation_residual, 1e-8);
}

TEST(Extract, DiagonalCongruenceFactor) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = -0.4;
  a(1, 1) = 0.9;
  const DriftOperator truth(a);
  const SemigroupProbe probe = [&](double t, const SymMat& x) { return truth.semigroup(t, x); };
  const Matrix f = congruence_factor(probe, 2, 0.3);
  EXPECT_NEAR(f(0, 0), std::exp(-0.4 * 0.3), 1e-14);
  EXPECT_LT((f - matrix_exponential(a, 0.3)).norm(), 1e-13);
}

TEST(Extract, RandomStableAndUnstable) {
  std::mt19937_64 g(10);
  for (int n = 0; n < 100; ++n) {
    const int d = 1 + n % 4;
    const DriftOperator truth(random_matrix(g, d, d, -2.0, 2.0));
    const SemigroupProbe probe = [&](double t, const SymMat& x) { return truth.semigroup(t, x); };
    const ExtractionResult r = extract_generator(probe, d);
    EXPECT_LT((r.op.A() - truth.A()).norm(), 1e-5 * (1.0 + truth.A().norm())) << "case " << n;
  }
}

TEST(Extract, WindowShrinkFailure) {
  const SemigroupProbe probe = [](double, const SymMat& x) { return x * -1.0; };
  EXPECT_EQ(code_of([&] { extract_generator(probe, 2); }), ErrorCode::kWindowShrink);
}

TEST(Extract, NotRepresentable) {
  // X + t tr(X) I is not a congruence.
  const SemigroupProbe probe = [](double t, const SymMat& x) { return x + SymMat::identity(x.dim()) * (t * x.trace()); };
  EXPECT_EQ(code_of([&] { extract_generator(probe, 2); }), ErrorCode::kNotRepresentable);
}
