#pragma once

// Positive semidefinite OU type process dS = (A S + S A^T) dt + dL:
// path simulation, stationary sampling, closed-form stationary moments and
// characteristic function, positivity diagnostics.

#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "psou/driftop.hpp"
#include "psou/random.hpp"
#include "psou/subordinators.hpp"

namespace psou {

struct OUOptions {
  double grid_step = 0.1;
  /// Burn-in horizon T satisfies ||e^{AT}||_2^2 <= burn_in_tol.
  double burn_in_tol = 1e-8;
  /// Truncation T* of the characteristic-function integral:
  /// ||e^{AT*}||_2^2 <= charfn_tail_tol.
  double charfn_tail_tol = 1e-10;
  double charfn_abs_tol = 1e-8;
  double charfn_rel_tol = 1e-12;
};

struct OUProcessSpec {
  DriftOperator drift;
  SubordinatorModel driver;
  PsdMat sigma0;
  OUOptions options;
};

/// Validates dimensions and driver parameters.
OUProcessSpec make_spec(DriftOperator drift, SubordinatorModel driver, PsdMat sigma0, OUOptions options = {});
/// Spec with sigma0 = 0.
OUProcessSpec make_spec(DriftOperator drift, SubordinatorModel driver, OUOptions options = {});

struct OUPath {
  std::vector<double> times;
  std::vector<SymMat> states;
  std::vector<Jump> jumps;  // absolute times
};

/// Exact transition between jumps: e^{Ah} S e^{A^T h} + int_0^h e^{As} gamma e^{A^T s} ds.
class DriftFlow {
 public:
  DriftFlow(const DriftOperator& drift, const SymMat& gamma);
  SymMat operator()(const SymMat& s, double h) const;

 private:
  Matrix a_;
  Matrix gamma_;
  bool has_drift_;
};

/// Deterministic solution on [t0, t1] started at `start`, given the driver's
/// jumps (absolute times in (t0, t1], sorted). States are recorded at every
/// grid point t0 + k * grid_step, at t1, and right after every jump.
OUPath evolve_path(const OUProcessSpec& spec, const SymMat& start, double t0, double t1,
                   const std::vector<Jump>& jumps, double grid_step);

/// Jump-exact for compound Poisson drivers; grid scheme for type_gbar.
OUPath simulate_path(const OUProcessSpec& spec, double horizon, RandomStream& rng);

/// Evolves `state` over `horizon` with fresh driver randomness, recording nothing.
SymMat advance(const OUProcessSpec& spec, const SymMat& state, double horizon, RandomStream& rng);

/// Smallest T (up to bisection precision) with ||e^{AT}||_2^2 <= tol. Requires a stable drift.
double decay_time(const DriftOperator& drift, double tol);

/// Burn-in from 0 over T_burn, then one draw every T_mix = T_burn.
std::vector<PsdMat> sample_stationary(const OUProcessSpec& spec, int n, RandomStream& rng);

/// Each entry holds S_t followed by S_{t + lag} for every lag (ascending).
using LaggedDraw = std::vector<SymMat>;
std::vector<LaggedDraw> sample_stationary_lagged(const OUProcessSpec& spec, int n,
                                                 const std::vector<double>& lags, RandomStream& rng);

enum class Provenance { kClosedForm, kMonteCarlo };
const char* to_string(Provenance p);

struct MomentStdErrors {
  Matrix mean;
  Matrix var_vec;
  std::map<double, Matrix> autocov;
};

struct MomentReport {
  SymMat mean;
  Matrix var_vec;                      // var(vec S), d^2 x d^2
  std::map<double, Matrix> autocov;    // lag -> cov(vec S_{t+h}, vec S_t); lag 0 is var_vec
  Provenance provenance = Provenance::kClosedForm;
  std::optional<MomentStdErrors> std_errors;
  std::optional<SymMat> gamma_sigma;   // drift part of the stationary law
  long samples = 0;
};

/// mean = -A^{-1} E(L_1), var = -calA^{-1} var(vec L_1), autocov(h) = e^{Gh} var.
MomentReport stationary_moments(const OUProcessSpec& spec, const std::vector<double>& lags = {});
/// Same formulas from raw driver moments; gamma_sigma is left empty.
MomentReport stationary_moments(const DriftOperator& drift, const SymMat& driver_mean,
                                const Matrix& driver_var_vec, const std::vector<double>& lags = {});

/// Sample moments with per-entry standard errors from independent lagged draws.
MomentReport empirical_moments(const std::vector<LaggedDraw>& draws, const std::vector<double>& lags);

/// Sample moments from one path on a regular grid; standard errors by batch means.
MomentReport empirical_moments_from_series(const std::vector<SymMat>& series, double grid_step,
                                           const std::vector<int>& lag_steps, int batches = 20);

struct CumulantValue {
  std::complex<double> value;
  double error = 0.0;
};

/// log of the stationary characteristic function:
/// int_0^inf psi_L(e^{A^T s} Z e^{A s}) ds, truncated at T*.
CumulantValue stationary_cumulant(const OUProcessSpec& spec, const SymMat& z);
/// exp(stationary_cumulant)
std::complex<double> stationary_charfn(const OUProcessSpec& spec, const SymMat& z);

struct PsdDiagnostics {
  long count = 0;
  double min_eigenvalue = 0.0;
  double fraction_positive_definite = 0.0;  // eigmin > kPsdTol
  std::map<int, long> rank_histogram;       // eigenvalues > kPsdTol
};

PsdDiagnostics psd_diagnostics(const std::vector<SymMat>& states);
PsdDiagnostics psd_diagnostics(const std::vector<PsdMat>& states);

}  // namespace psou
