#pragma once

// Inverse problems: the driver exponent of a target stationary law, the
// drift condition -A g - g A^T in S_d^+, and method-of-moments fitting of
// (A, E(L_1), var(vec L_1)) from stationary moments.

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "psou/driftop.hpp"
#include "psou/oup.hpp"

namespace psou {

using ComplexMatrix = Eigen::MatrixXcd;
using ExponentFn = std::function<std::complex<double>(const SymMat&)>;
/// Riesz representative: D psi(Z) X = tr(G(Z) X) for symmetric X.
using GradientFn = std::function<ComplexMatrix(const SymMat&)>;

struct CumulantTransform {
  ExponentFn psi;
  std::optional<GradientFn> gradient;  // numerical differences when empty
  std::optional<SymMat> gamma_mu;
};

/// The cumulant transform of a psOU stationary law via stationary_cumulant.
CumulantTransform stationary_cumulant_transform(const OUProcessSpec& spec);

/// Central differences along the orthonormal basis E^(ii), (E^(ij)+E^(ji))/sqrt(2)
/// of S_d with step 1e-5 (1 + ||Z||_F).
ComplexMatrix numerical_gradient(const ExponentFn& psi, const SymMat& z);

/// psi_L(Z) = -D psi(Z)(A^T Z + Z A), psi_L(0) = 0.
ExponentFn derive_driver_charfn(const CumulantTransform& target, const DriftOperator& drift);

/// |psi_L(t U)| decreasing towards 0 along a few rays t -> 0.
bool continuous_at_zero(const ExponentFn& psi_l, int d);

struct DriftCondition {
  SymMat matrix;    // -A g - g A^T
  Vector spectrum;  // ascending
  bool is_psd = false;
};

DriftCondition drift_condition_check(const DriftOperator& drift, const SymMat& gamma_mu);

struct MomFitOptions {
  /// Lag to use; 0 selects the smallest positive lag in the report.
  double lag = 0.0;
  /// Tried in order when the matrix logarithm fails at `lag`.
  std::vector<double> fallback_lags;
  /// Least squares over every positive lag in the report instead of one.
  bool multi_lag = false;
  double max_condition = 1e10;
};

struct MomFitResiduals {
  double projection_distance = 0.0;   // ||G_hat - P(A_hat)||_F on vech coordinates
  double reconstruction_error = 0.0;  // max_h ||e^{Gh} var - autocov(h)||_F / (1 + ||autocov(h)||_F)
  double psd_clip = 0.0;              // magnitude of clipped negative eigenvalues
  double condition = 0.0;             // condition number of var(vech S)
  std::vector<double> lags_used;
};

struct MoMEstimate {
  DriftOperator A_hat;
  SymMat mean_L;
  Matrix var_vec_L;
  MomFitResiduals residuals;
  bool stable = false;
  bool mean_L_psd = false;
};

/// Inverts the stationary moment relations. Works on vech coordinates, where
/// var(vech S) is invertible; var(vec S) never is for d >= 2.
MoMEstimate mom_fit(const MomentReport& empirical, const MomFitOptions& opts = {});

}  // namespace psou
