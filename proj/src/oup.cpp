#include "psou/oup.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "psou/quadrature.hpp"

namespace psou {

OUProcessSpec make_spec(DriftOperator drift, SubordinatorModel driver, PsdMat sigma0, OUOptions options) {
  const int d = drift.dim();
  if (model_dim(driver) != d || sigma0.dim() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "OU spec: drift, driver and sigma0 dimensions differ");
  }
  validate_model(driver);
  if (!(options.grid_step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "OU spec: grid_step must be > 0");
  if (!(options.burn_in_tol > 0.0 && options.burn_in_tol < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "OU spec: burn_in_tol must lie in (0, 1)");
  }
  return OUProcessSpec{std::move(drift), std::move(driver), std::move(sigma0), options};
}

OUProcessSpec make_spec(DriftOperator drift, SubordinatorModel driver, OUOptions options) {
  const int d = drift.dim();
  return make_spec(std::move(drift), std::move(driver), require_psd(SymMat::zero(d)), options);
}

DriftFlow::DriftFlow(const DriftOperator& drift, const SymMat& gamma)
    : a_(drift.A()), gamma_(gamma.matrix()), has_drift_(!gamma.matrix().isZero(0.0)) {}

SymMat DriftFlow::operator()(const SymMat& s, double h) const {
  if (h == 0.0) return s;
  const int d = static_cast<int>(a_.rows());
  if (!has_drift_) {
    const Matrix e = matrix_exponential(a_, h);
    return SymMat::symmetrize(e * s.matrix() * e.transpose());
  }
  // Van Loan: exp([[A, g], [0, -A^T]] h) = [[e^{Ah}, F12], [0, *]] and
  // int_0^h e^{Au} g e^{A^T u} du = F12 e^{A^T h}.
  Matrix block = Matrix::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = a_;
  block.topRightCorner(d, d) = gamma_;
  block.bottomRightCorner(d, d) = -a_.transpose();
  const Matrix big = matrix_exponential(block, h);
  const Matrix e = big.topLeftCorner(d, d);
  const Matrix drift = big.topRightCorner(d, d) * e.transpose();
  return SymMat::symmetrize(e * s.matrix() * e.transpose() + drift);
}

namespace {

std::vector<double> grid_points(double t0, double t1, double step) {
  std::vector<double> pts;
  for (long k = 1;; ++k) {
    const double t = t0 + static_cast<double>(k) * step;
    if (t >= t1 - 1e-12 * step) break;
    pts.push_back(t);
  }
  pts.push_back(t1);
  return pts;
}

using Recorder = std::function<void(double, const SymMat&)>;

SymMat evolve_core(const DriftFlow& flow, const SymMat& start, double t0, const std::vector<double>& grid,
                   const std::vector<Jump>& jumps, const Recorder& record) {
  SymMat state = start;
  double t = t0;
  size_t j = 0;
  for (double g : grid) {
    while (j < jumps.size() && jumps[j].time <= g) {
      state = flow(state, jumps[j].time - t);
      t = jumps[j].time;
      state += jumps[j].matrix;
      ++j;
      // Several jumps may share a time; record once after the last of them.
      const bool more_now = j < jumps.size() && jumps[j].time == t;
      if (record && !more_now && t != g) record(t, state);
    }
    state = flow(state, g - t);
    t = g;
    if (record) record(t, state);
  }
  if (!state.matrix().allFinite()) throw Error(ErrorCode::kNonFinite, "OU simulation produced a non-finite state");
  return state;
}

std::vector<Jump> sample_jumps(const OUProcessSpec& spec, const std::vector<double>& grid, double t0,
                               RandomStream& rng) {
  std::vector<Jump> out;
  double a = t0;
  const bool exact = has_exact_jumps(spec.driver);
  for (double b : grid) {
    Increment inc = sample_increment(spec.driver, b - a, rng);
    for (auto& jump : inc.jumps) {
      jump.time = exact ? a + jump.time : b;
      out.push_back(std::move(jump));
    }
    a = b;
  }
  return out;
}

void require_stable(const DriftOperator& drift) {
  const auto report = drift.stability();
  if (!report.stable) {
    throw Error(ErrorCode::kUnstableDrift, "stationary operation requires a stable drift (margin " +
                                               std::to_string(report.margin) + ")");
  }
}

}  // namespace

OUPath evolve_path(const OUProcessSpec& spec, const SymMat& start, double t0, double t1,
                   const std::vector<Jump>& jumps, double grid_step) {
  if (!(t1 > t0)) throw Error(ErrorCode::kInvalidArgument, "evolve_path: requires t1 > t0");
  if (!(grid_step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "evolve_path: grid_step must be > 0");
  for (size_t i = 0; i < jumps.size(); ++i) {
    if (!(jumps[i].time > t0 && jumps[i].time <= t1) || (i > 0 && jumps[i].time < jumps[i - 1].time)) {
      throw Error(ErrorCode::kInvalidArgument, "evolve_path: jump times must be sorted within (t0, t1]");
    }
  }
  const DriftFlow flow(spec.drift, drift_part(spec.driver));
  OUPath path;
  path.times.push_back(t0);
  path.states.push_back(start);
  evolve_core(flow, start, t0, grid_points(t0, t1, grid_step), jumps, [&](double t, const SymMat& s) {
    path.times.push_back(t);
    path.states.push_back(s);
  });
  path.jumps = jumps;
  return path;
}

OUPath simulate_path(const OUProcessSpec& spec, double horizon, RandomStream& rng) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "simulate_path: horizon must be > 0");
  const auto grid = grid_points(0.0, horizon, spec.options.grid_step);
  const auto jumps = sample_jumps(spec, grid, 0.0, rng);
  return evolve_path(spec, spec.sigma0.base(), 0.0, horizon, jumps, spec.options.grid_step);
}

SymMat advance(const OUProcessSpec& spec, const SymMat& state, double horizon, RandomStream& rng) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "advance: horizon must be > 0");
  const double step = has_exact_jumps(spec.driver) ? horizon : spec.options.grid_step;
  const auto grid = grid_points(0.0, horizon, step);
  const auto jumps = sample_jumps(spec, grid, 0.0, rng);
  const DriftFlow flow(spec.drift, drift_part(spec.driver));
  return evolve_core(flow, state, 0.0, grid, jumps, nullptr);
}

double decay_time(const DriftOperator& drift, double tol) {
  require_stable(drift);
  const double margin = drift.stability().margin;
  auto norm_sq = [&](double t) {
    Eigen::JacobiSVD<Matrix> svd(drift.propagator(t));
    const double s = svd.singularValues()(0);
    return s * s;
  };
  double hi = 1.0 / std::fabs(margin);
  for (int it = 0; norm_sq(hi) > tol; ++it) {
    if (it > 200) throw Error(ErrorCode::kNonFinite, "decay_time: no decay horizon found");
    hi *= 2.0;
  }
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (norm_sq(mid) <= tol ? hi : lo) = mid;
  }
  return hi;
}

std::vector<LaggedDraw> sample_stationary_lagged(const OUProcessSpec& spec, int n, const std::vector<double>& lags,
                                                 RandomStream& rng) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "sample_stationary: n must be >= 1");
  for (size_t i = 0; i < lags.size(); ++i) {
    if (!(lags[i] > 0.0) || (i > 0 && lags[i] <= lags[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "sample_stationary: lags must be positive and increasing");
    }
  }
  const double t_mix = decay_time(spec.drift, spec.options.burn_in_tol);
  SymMat state = advance(spec, SymMat::zero(spec.drift.dim()), t_mix, rng);
  std::vector<LaggedDraw> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) state = advance(spec, state, t_mix, rng);
    LaggedDraw draw{state};
    double t = 0.0;
    for (double lag : lags) {
      state = advance(spec, state, lag - t, rng);
      t = lag;
      draw.push_back(state);
    }
    out.push_back(std::move(draw));
  }
  return out;
}

std::vector<PsdMat> sample_stationary(const OUProcessSpec& spec, int n, RandomStream& rng) {
  std::vector<PsdMat> out;
  out.reserve(n);
  for (auto& draw : sample_stationary_lagged(spec, n, {}, rng)) {
    out.push_back(require_psd(draw.front(), scaled_psd_tol(draw.front())));
  }
  return out;
}

const char* to_string(Provenance p) { return p == Provenance::kClosedForm ? "closed_form" : "monte_carlo"; }

MomentReport stationary_moments(const DriftOperator& op, const SymMat& mean_l, const Matrix& var_l,
                                const std::vector<double>& lags) {
  require_stable(op);
  MomentReport report;
  report.provenance = Provenance::kClosedForm;
  report.mean = op.solve(mean_l) * -1.0;
  report.var_vec = -op.solve_big(var_l);
  report.autocov[0.0] = report.var_vec;
  for (double h : lags) {
    if (!(h >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "stationary_moments: lags must be >= 0");
    report.autocov[h] = matrix_exponential(op.generator(), h) * report.var_vec;
  }
  return report;
}

MomentReport stationary_moments(const OUProcessSpec& spec, const std::vector<double>& lags) {
  MomentReport report =
      stationary_moments(spec.drift, driver_mean(spec.driver), driver_var_vec(spec.driver), lags);
  report.gamma_sigma = spec.drift.solve(drift_part(spec.driver)) * -1.0;
  return report;
}

namespace {

struct CrossAccumulator {
  // Running sums of x, and of products x_a y_b for lag pairs.
  explicit CrossAccumulator(int n) : sum(Matrix::Zero(n, n)), sum_sq(Matrix::Zero(n, n)) {}
  void add(const Vector& y, const Vector& x) {
    const Matrix p = y * x.transpose();
    sum += p;
    sum_sq += p.cwiseProduct(p);
  }
  Matrix sum;
  Matrix sum_sq;
};

Matrix se_from_sums(const Matrix& sum, const Matrix& sum_sq, long n) {
  const Matrix mean = sum / static_cast<double>(n);
  Matrix var = (sum_sq / static_cast<double>(n) - mean.cwiseProduct(mean)) * (n / (n - 1.0));
  return (var.cwiseMax(0.0) / static_cast<double>(n)).cwiseSqrt();
}

}  // namespace

MomentReport empirical_moments(const std::vector<LaggedDraw>& draws, const std::vector<double>& lags) {
  const long n = static_cast<long>(draws.size());
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "empirical_moments: need at least two draws");
  const int d = draws.front().front().dim();
  const int dd = d * d;
  for (const auto& draw : draws) {
    if (draw.size() != lags.size() + 1) {
      throw Error(ErrorCode::kDimensionMismatch, "empirical_moments: each draw needs one state per lag plus one");
    }
  }
  Vector mean = Vector::Zero(dd);
  Vector mean_sq = Vector::Zero(dd);
  for (const auto& draw : draws) {
    const Vector x = vec(draw.front().matrix());
    mean += x;
    mean_sq += x.cwiseProduct(x);
  }
  mean /= static_cast<double>(n);
  mean_sq /= static_cast<double>(n);

  std::vector<CrossAccumulator> acc(lags.size() + 1, CrossAccumulator(dd));
  for (const auto& draw : draws) {
    const Vector x = vec(draw.front().matrix()) - mean;
    for (size_t l = 0; l < draw.size(); ++l) acc[l].add(vec(draw[l].matrix()) - mean, x);
  }

  MomentReport report;
  report.provenance = Provenance::kMonteCarlo;
  report.samples = n;
  report.mean = SymMat::symmetrize(unvec(mean, d));
  MomentStdErrors se;
  const Vector var_diag = ((mean_sq - mean.cwiseProduct(mean)) * (n / (n - 1.0))).cwiseMax(0.0);
  se.mean = unvec((var_diag / static_cast<double>(n)).cwiseSqrt(), d);
  for (size_t l = 0; l < acc.size(); ++l) {
    const double lag = l == 0 ? 0.0 : lags[l - 1];
    Matrix cov = acc[l].sum / static_cast<double>(n);
    if (l == 0) cov = 0.5 * (cov + cov.transpose());
    report.autocov[lag] = cov;
    se.autocov[lag] = se_from_sums(acc[l].sum, acc[l].sum_sq, n);
  }
  report.var_vec = report.autocov[0.0];
  se.var_vec = se.autocov[0.0];
  report.std_errors = std::move(se);
  return report;
}

MomentReport empirical_moments_from_series(const std::vector<SymMat>& series, double grid_step,
                                           const std::vector<int>& lag_steps, int batches) {
  if (batches < 2) throw Error(ErrorCode::kInvalidArgument, "empirical_moments_from_series: need >= 2 batches");
  const int max_lag = lag_steps.empty() ? 0 : *std::max_element(lag_steps.begin(), lag_steps.end());
  const long usable = static_cast<long>(series.size()) - max_lag;
  if (usable < 2L * batches) throw Error(ErrorCode::kInvalidArgument, "empirical_moments_from_series: series too short");
  const int d = series.front().dim();
  const int dd = d * d;

  std::vector<int> lags{0};
  for (int s : lag_steps) {
    if (s <= 0) throw Error(ErrorCode::kInvalidArgument, "empirical_moments_from_series: lag steps must be > 0");
    lags.push_back(s);
  }

  struct Estimate {
    Vector mean;
    std::vector<Matrix> cov;
  };
  auto estimate = [&](long begin, long end) {
    Estimate e{Vector::Zero(dd), {}};
    for (long i = begin; i < end; ++i) e.mean += vec(series[i].matrix());
    e.mean /= static_cast<double>(end - begin);
    for (int lag : lags) {
      Matrix c = Matrix::Zero(dd, dd);
      for (long i = begin; i < end; ++i) {
        c += (vec(series[i + lag].matrix()) - e.mean) * (vec(series[i].matrix()) - e.mean).transpose();
      }
      e.cov.push_back(c / static_cast<double>(end - begin));
    }
    return e;
  };

  const Estimate full = estimate(0, usable);
  const long len = usable / batches;
  Vector mean_sq = Vector::Zero(dd);
  std::vector<Matrix> cov_sq(lags.size(), Matrix::Zero(dd, dd));
  for (int b = 0; b < batches; ++b) {
    const Estimate e = estimate(b * len, (b + 1) * len);
    mean_sq += (e.mean - full.mean).cwiseAbs2();
    for (size_t l = 0; l < lags.size(); ++l) cov_sq[l] += (e.cov[l] - full.cov[l]).cwiseAbs2();
  }
  const double scale = 1.0 / (static_cast<double>(batches) * (batches - 1));

  MomentReport report;
  report.provenance = Provenance::kMonteCarlo;
  report.samples = usable;
  report.mean = SymMat::symmetrize(unvec(full.mean, d));
  MomentStdErrors se;
  se.mean = unvec((mean_sq * scale).cwiseSqrt(), d);
  for (size_t l = 0; l < lags.size(); ++l) {
    const double lag = lags[l] * grid_step;
    Matrix cov = full.cov[l];
    if (l == 0) cov = 0.5 * (cov + cov.transpose());
    report.autocov[lag] = cov;
    se.autocov[lag] = (cov_sq[l] * scale).cwiseSqrt();
  }
  report.var_vec = report.autocov[0.0];
  se.var_vec = se.autocov[0.0];
  report.std_errors = std::move(se);
  return report;
}

CumulantValue stationary_cumulant(const OUProcessSpec& spec, const SymMat& z) {
  const DriftOperator& op = spec.drift;
  if (z.dim() != op.dim()) throw Error(ErrorCode::kDimensionMismatch, "stationary_charfn: dimension mismatch");
  require_stable(op);
  if (z.matrix().isZero(0.0)) return CumulantValue{0.0, 0.0};
  const double t_star = decay_time(op, spec.options.charfn_tail_tol);
  const double piece = std::min(t_star, 1.0 / std::fabs(op.stability().margin));
  const int pieces = static_cast<int>(std::ceil(t_star / piece));

  auto integrand = [&](double s) {
    const Matrix e = op.propagator(s);
    return char_exponent(spec.driver, SymMat::symmetrize(e.transpose() * z.matrix() * e)).value;
  };
  QuadratureOptions opts;
  opts.abs_tol = spec.options.charfn_abs_tol / pieces;
  opts.rel_tol = spec.options.charfn_rel_tol;
  CumulantValue out{0.0, 0.0};
  for (int p = 0; p < pieces; ++p) {
    const double a = p * t_star / pieces;
    const double b = (p + 1) * t_star / pieces;
    const auto res = integrate_adaptive(integrand, a, b, opts);
    if (!res.converged) {
      throw Error(ErrorCode::kQuadrature, "stationary_charfn: quadrature did not converge (achieved error " +
                                              std::to_string(res.error) + ")");
    }
    out.value += res.value;
    out.error += res.error;
  }
  return out;
}

std::complex<double> stationary_charfn(const OUProcessSpec& spec, const SymMat& z) {
  return std::exp(stationary_cumulant(spec, z).value);
}

PsdDiagnostics psd_diagnostics(const std::vector<SymMat>& states) {
  PsdDiagnostics diag;
  diag.count = static_cast<long>(states.size());
  diag.min_eigenvalue = std::numeric_limits<double>::infinity();
  long pd = 0;
  for (const auto& s : states) {
    const Vector ev = s.eigenvalues();
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, ev(0));
    if (ev(0) > kPsdTol) ++pd;
    diag.rank_histogram[static_cast<int>((ev.array() > kPsdTol).count())] += 1;
  }
  diag.fraction_positive_definite = diag.count > 0 ? static_cast<double>(pd) / diag.count : 0.0;
  return diag;
}

PsdDiagnostics psd_diagnostics(const std::vector<PsdMat>& states) {
  std::vector<SymMat> plain;
  plain.reserve(states.size());
  for (const auto& s : states) plain.push_back(s.base());
  return psd_diagnostics(plain);
}

}  // namespace psou
