#pragma once

// Matrix subordinator drivers: model definitions, increment sampling,
// characteristic exponents, and closed-form first and second moments.

#include <complex>
#include <optional>
#include <variant>
#include <vector>

#include "psou/bessel.hpp"
#include "psou/random.hpp"
#include "psou/symcore.hpp"

namespace psou {

struct ConstantMixing {
  double value = 1.0;
};

/// GIG(nu, delta, alpha); nu = -1/2 is the inverse Gaussian (NIG case).
struct GigMixing {
  double nu = -0.5;
  double delta = 1.0;
  double alpha = 1.0;

  bool is_inverse_gaussian() const { return nu == -0.5; }
};

using MixingLaw = std::variant<ConstantMixing, GigMixing>;

MixingMoments mixing_moments(const MixingLaw& law);

/// Deterministic drift gamma. A non-PSD gamma is allowed and marks the model
/// as not a subordinator.
struct DriftOnly {
  SymMat gamma;
};

/// L_t = diag(gamma t + B Ltilde_t) where Ltilde has k independent compound
/// Poisson components with the given rate and Exp(jump_rate) jumps.
struct DiagonalCP {
  Matrix B;          // d x k, nonnegative
  double rate;       // per-component Poisson rate
  double jump_rate;  // lambda of the exponential jump law
  Vector gamma;      // nonnegative diagonal drift
};

/// Compound Poisson with rank-one jumps x x^T, x = (eps C)^{1/2} N(0, I).
/// `drift` defaults to zero; a non-PSD drift marks the model as not a
/// subordinator (finite variation process with PSD jumps).
struct GaussMixtureCP {
  double rate;
  PsdMat C;
  MixingLaw mixing;
  std::optional<SymMat> drift;
};

/// Quadratic variation [L, L] of a type-Gbar Levy process L with
/// L_1 = (eps C)^{1/2} X. Simulation requires inverse Gaussian mixing.
struct TypeGbar {
  PsdMat C;
  GigMixing mixing;
  int substeps = 16;
};

using SubordinatorModel = std::variant<DriftOnly, DiagonalCP, GaussMixtureCP, TypeGbar>;

int model_dim(const SubordinatorModel& model);
const char* model_kind(const SubordinatorModel& model);
/// False when the drift part is outside the PSD cone.
bool is_subordinator(const SubordinatorModel& model);
/// True for models whose sample paths are exact compound Poisson (jump times
/// known), false for grid-approximated drivers.
bool has_exact_jumps(const SubordinatorModel& model);
/// gamma_L, the drift part of the characteristic exponent.
SymMat drift_part(const SubordinatorModel& model);
/// E(L_1)
SymMat driver_mean(const SubordinatorModel& model);
/// var(vec(L_1)), d^2 x d^2.
Matrix driver_var_vec(const SubordinatorModel& model);
/// Throws kInvalidArgument when parameters violate the model's constraints.
void validate_model(const SubordinatorModel& model);

struct Jump {
  double time = 0.0;  // offset from the start of the sampled interval
  SymMat matrix;
};

struct Increment {
  SymMat value;              // drift * dt + sum of jumps
  std::vector<Jump> jumps;   // sorted by time
};

Increment sample_increment(const SubordinatorModel& model, double dt, RandomStream& rng);

enum class ExponentMode { kExact, kQuadrature, kMonteCarlo };

struct ExponentValue {
  std::complex<double> value;
  ExponentMode mode = ExponentMode::kExact;
  double std_error = 0.0;
};

/// psi_L(Z) = i tr(gamma Z) + int (e^{i tr(XZ)} - 1) nu_L(dX).
ExponentValue char_exponent(const SubordinatorModel& model, const SymMat& z);
/// Monte Carlo estimate log E exp(i tr(L_1 Z)) from n unit increments; the
/// standard error is that of the log by the delta method.
ExponentValue char_exponent_mc(const SubordinatorModel& model, const SymMat& z, int n,
                               RandomStream& rng);

/// Sum of outer products of the given jump vectors.
SymMat discrete_qv(const std::vector<Vector>& jumps, int d);

/// C (x) C + K_d (C (x) C) + vec(C) vec(C)^T
Matrix wishart_kernel(const Matrix& c);

enum class QvKind { kCompoundPoisson, kTypeGbar };

struct QvMoments {
  SymMat mean;
  Matrix var;
};

QvMoments mixture_qv_moments(QvKind kind, double rate, const MixingMoments& mix, const PsdMat& c);

/// Prop-5.3 style construction: a diagonal subordinator with E(L_1) = diag(mu)
/// and var(diag(L_1)) = B B^T. An all-zero B yields a DriftOnly model.
SubordinatorModel build_multivariate_subordinator(const Vector& mu, const Matrix& b);

}  // namespace psou
