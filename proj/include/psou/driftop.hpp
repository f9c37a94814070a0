#pragma once

// The drift operator X -> AX + XA^T on symmetric matrices, its semigroup
// e^{At} X e^{A^T t}, vec-space generator A (x) I + I (x) A, inverses, and the
// two constructive procedures that recover A from operator evaluations.

#include <complex>
#include <functional>
#include <vector>

#include "psou/symcore.hpp"

namespace psou {

struct StabilityReport {
  std::vector<std::complex<double>> spectrum;  // sorted by real part, then imag
  double margin = 0.0;                         // max real part
  bool stable = false;                         // margin < 0
};

enum class SolveLevel { kSmall, kBig };

/// Refuse inversion when the LU reciprocal condition estimate falls below this.
inline constexpr double kMinReciprocalCondition = 1e-12;

class DriftOperator {
 public:
  explicit DriftOperator(Matrix a);

  int dim() const { return static_cast<int>(a_.rows()); }
  const Matrix& A() const { return a_; }
  /// A (x) I + I (x) A, the matrix of the operator acting on vec(X).
  const Matrix& generator() const { return generator_; }

  SymMat apply(const SymMat& x) const;
  /// e^{At}
  Matrix propagator(double t) const { return matrix_exponential(a_, t); }
  /// e^{At} X e^{A^T t}
  SymMat semigroup(double t, const SymMat& x) const;

  /// Solves AX + XA^T = Y for symmetric X.
  SymMat solve(const SymMat& y) const;
  /// Solves G V + V G^T = W for V in S_{d^2}, G = generator().
  Matrix solve_big(const Matrix& w) const;

  StabilityReport stability() const;

 private:
  Matrix a_;
  Matrix generator_;
};

SymMat apply_drift(const DriftOperator& op, const SymMat& x);
SymMat semigroup_apply(const DriftOperator& op, double t, const SymMat& x);
Matrix generator_matrix(const DriftOperator& op);
StabilityReport stability_margin(const DriftOperator& op);

/// Result of solve_drift_equation: a SymMat for the small level, a d^2 x d^2
/// symmetric matrix for the big level.
struct DriftSolution {
  SymMat small;
  Matrix big;
};
DriftSolution solve_drift_equation(const DriftOperator& op, const Matrix& rhs, SolveLevel level);

/// Reads A back from images[i] = A E^(ii) + E^(ii) A^T.
DriftOperator recover_from_basis_action(const std::vector<SymMat>& images);

using SemigroupProbe = std::function<SymMat(double t, const SymMat& x)>;

struct ExtractOptions {
  /// Base finite-difference step before scaling by (1 + image scale).
  double base_step = 1e-5;
  int max_halvings = 20;
  /// Residual tolerance of the congruence representation, relative to
  /// (1 + ||image||_F).
  double representation_tol = 1e-8;
};

struct ExtractionResult {
  DriftOperator op;
  double step = 0.0;
  double representation_residual = 0.0;
};

/// Rebuilds the congruence factor D(t) of a semigroup from its action on
/// E^(11) and E^(1j) + E^(j1), then differentiates at t = 0 with a Richardson
/// extrapolated central difference.
ExtractionResult extract_generator(const SemigroupProbe& semigroup, int d,
                                   const ExtractOptions& opts = {});

/// The congruence factor D(t) with D(t) X D(t)^T = semigroup(t, X) and
/// D_11(t) > 0. Throws kWindowShrink when (semigroup(t, E^(11)))_11 <= 0.
Matrix congruence_factor(const SemigroupProbe& semigroup, int d, double t);

}  // namespace psou
