#include "psou/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psou {

CumulantTransform stationary_cumulant_transform(const OUProcessSpec& spec) {
  CumulantTransform t;
  t.psi = [spec](const SymMat& z) { return stationary_cumulant(spec, z).value; };
  t.gamma_mu = spec.drift.solve(drift_part(spec.driver)) * -1.0;
  return t;
}

ComplexMatrix numerical_gradient(const ExponentFn& psi, const SymMat& z) {
  const int d = z.dim();
  const double h = 1e-5 * (1.0 + z.frobenius_norm());
  ComplexMatrix grad = ComplexMatrix::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      const double norm = i == j ? 1.0 : std::sqrt(2.0);
      const SymMat dir = SymMat::basis(d, i, j) * (1.0 / norm);
      const std::complex<double> g = (psi(z + dir * h) - psi(z - dir * h)) / (2.0 * h);
      // grad = sum_b g_b B_b with B_b the orthonormal basis element.
      grad(i, j) += g / norm;
      if (i != j) grad(j, i) += g / norm;
    }
  }
  return grad;
}

ExponentFn derive_driver_charfn(const CumulantTransform& target, const DriftOperator& drift) {
  if (!drift.stability().stable) {
    throw Error(ErrorCode::kUnstableDrift, "derive_driver_charfn: drift must be stable");
  }
  if (!target.psi) throw Error(ErrorCode::kInvalidArgument, "derive_driver_charfn: target psi is empty");
  const Matrix a = drift.A();
  return [target, a](const SymMat& z) -> std::complex<double> {
    if (z.dim() != a.rows()) throw Error(ErrorCode::kDimensionMismatch, "driver exponent: dimension mismatch");
    if (z.matrix().isZero(0.0)) return 0.0;
    const ComplexMatrix grad = target.gradient ? (*target.gradient)(z) : numerical_gradient(target.psi, z);
    const Matrix direction = a.transpose() * z.matrix() + z.matrix() * a;
    const std::complex<double> value = -(grad.array() * direction.cast<std::complex<double>>().array()).sum();
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
      throw Error(ErrorCode::kNonFinite, "driver exponent: non-finite value");
    }
    return value;
  };
}

bool continuous_at_zero(const ExponentFn& psi_l, int d) {
  const std::vector<SymMat> rays = {SymMat::identity(d), SymMat::basis(d, 0, d - 1),
                                    SymMat::identity(d) * -1.0};
  for (const auto& u : rays) {
    double previous = std::abs(psi_l(u * 1e-1));
    for (double t : {1e-2, 1e-3, 1e-4}) {
      const double current = std::abs(psi_l(u * t));
      if (current > previous + 1e-12) return false;
      previous = current;
    }
    if (previous > 1e-2) return false;
  }
  return true;
}

DriftCondition drift_condition_check(const DriftOperator& drift, const SymMat& gamma_mu) {
  if (gamma_mu.dim() != drift.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "drift_condition_check: dimension mismatch");
  }
  DriftCondition out;
  out.matrix = drift.apply(gamma_mu) * -1.0;
  out.spectrum = out.matrix.eigenvalues();
  out.is_psd = out.spectrum(0) >= -scaled_psd_tol(out.matrix);
  return out;
}

namespace {

// Matrix whose column (i + j d) is vech-coordinates of X -> E_ij X + X E_ji,
// i.e. the linear map A -> D^+ (A (x) I + I (x) A) D flattened.
Matrix vech_generator_design(int d) {
  const int s = vech_size(d);
  const Matrix dup = duplication_matrix(d);
  const Matrix pinv = duplication_pinv(d);
  Matrix design(s * s, d * d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      Matrix e = Matrix::Zero(d, d);
      e(i, j) = 1.0;
      const Matrix block = pinv * kronecker_sum(e) * dup;
      design.col(i + j * d) = vec(block);
    }
  }
  return design;
}

}  // namespace

MoMEstimate mom_fit(const MomentReport& empirical, const MomFitOptions& opts) {
  const int d = empirical.mean.dim();
  const int dd = d * d;
  if (empirical.var_vec.rows() != dd || empirical.var_vec.cols() != dd) {
    throw Error(ErrorCode::kDimensionMismatch, "mom_fit: var_vec must be d^2 x d^2");
  }
  const Matrix dup = duplication_matrix(d);
  const Matrix pinv = duplication_pinv(d);

  MomFitResiduals res;
  const Matrix var_sym = 0.5 * (empirical.var_vec + empirical.var_vec.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(pinv * var_sym * pinv.transpose());
  Vector ev = es.eigenvalues();
  res.psd_clip = std::max(0.0, -ev(0));
  ev = ev.cwiseMax(0.0);
  if (!(ev(0) > 0.0) || ev(ev.size() - 1) / ev(0) > opts.max_condition) {
    throw Error(ErrorCode::kSingularOperator, "mom_fit: var(vech) is singular or too ill-conditioned");
  }
  res.condition = ev(ev.size() - 1) / ev(0);
  const Matrix& u = es.eigenvectors();
  const Matrix var_vech_inv = u * ev.cwiseInverse().asDiagonal() * u.transpose();
  const Matrix var_vech = u * ev.asDiagonal() * u.transpose();
  const Matrix var_vec = dup * var_vech * dup.transpose();

  auto log_generator = [&](double h) -> std::optional<Matrix> {
    const auto it = empirical.autocov.find(h);
    if (it == empirical.autocov.end()) {
      throw Error(ErrorCode::kInvalidArgument, "mom_fit: no autocovariance at lag " + std::to_string(h));
    }
    const Matrix ratio = pinv * it->second * pinv.transpose() * var_vech_inv;
    try {
      return Matrix(matrix_logarithm(ratio) / h);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBranchCut) throw;
      return std::nullopt;
    }
  };

  std::vector<double> positive_lags;
  for (const auto& [lag, cov] : empirical.autocov) {
    if (lag > 0.0) positive_lags.push_back(lag);
  }
  if (positive_lags.empty()) throw Error(ErrorCode::kInvalidArgument, "mom_fit: needs a positive lag");

  std::vector<Matrix> generators;
  if (opts.multi_lag) {
    for (double h : positive_lags) {
      if (auto g = log_generator(h)) {
        generators.push_back(*g);
        res.lags_used.push_back(h);
      }
    }
  } else {
    std::vector<double> candidates{opts.lag > 0.0 ? opts.lag : positive_lags.front()};
    candidates.insert(candidates.end(), opts.fallback_lags.begin(), opts.fallback_lags.end());
    for (double h : candidates) {
      if (auto g = log_generator(h)) {
        generators.push_back(*g);
        res.lags_used.push_back(h);
        break;
      }
    }
  }
  if (generators.empty()) {
    throw Error(ErrorCode::kBranchCut, "mom_fit: matrix logarithm failed at every candidate lag");
  }

  // Least-squares projection onto {D^+ (A (x) I + I (x) A) D}.
  const Matrix design = vech_generator_design(d);
  const long block = design.rows();
  Matrix stacked_design(block * static_cast<long>(generators.size()), dd);
  Vector stacked_rhs(block * static_cast<long>(generators.size()));
  for (size_t g = 0; g < generators.size(); ++g) {
    stacked_design.middleRows(g * block, block) = design;
    stacked_rhs.segment(g * block, block) = vec(generators[g]);
  }
  const Vector a_vec = stacked_design.colPivHouseholderQr().solve(stacked_rhs);
  res.projection_distance = (stacked_design * a_vec - stacked_rhs).norm();
  DriftOperator a_hat(unvec(a_vec, d));

  const Matrix& g = a_hat.generator();
  SymMat mean_l = a_hat.apply(empirical.mean) * -1.0;
  Matrix var_l = -(g * var_vec + var_vec * g.transpose());
  var_l = 0.5 * (var_l + var_l.transpose());

  for (const auto& [lag, cov] : empirical.autocov) {
    const Matrix rebuilt = matrix_exponential(g, lag) * var_vec;
    res.reconstruction_error = std::max(res.reconstruction_error, (rebuilt - cov).norm() / (1.0 + cov.norm()));
  }

  const bool stable = a_hat.stability().stable;
  const bool mean_psd = psd_check(mean_l, scaled_psd_tol(mean_l)).has_value();
  return MoMEstimate{std::move(a_hat), std::move(mean_l), std::move(var_l), std::move(res), stable, mean_psd};
}

}  // namespace psou
