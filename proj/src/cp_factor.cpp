#include "psou/cp_factor.hpp"

#include <algorithm>
#include <cmath>

#include "psou/random.hpp"

namespace psou {

const char* to_string(CpStatus status) {
  switch (status) {
    case CpStatus::kFound: return "found";
    case CpStatus::kNotFound: return "not_found";
    case CpStatus::kRejected: return "rejected";
  }
  return "unknown";
}

bool is_doubly_nonnegative(const SymMat& c, std::string* reason) {
  const double scale = c.matrix().cwiseAbs().maxCoeff();
  if (c.matrix().minCoeff() < -1e-12 * scale) {
    if (reason) *reason = "matrix has a negative entry";
    return false;
  }
  if (!psd_check(c, scaled_psd_tol(c)).has_value()) {
    if (reason) *reason = "matrix is not positive semidefinite";
    return false;
  }
  return true;
}

namespace {

Matrix random_orthogonal(int k, RandomStream& rng) {
  Matrix g(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(k, k);
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

// Orthogonal polar factor of m.
Matrix polar_orthogonal(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

CpResult cp_factorize(const SymMat& c, const CpOptions& opts) {
  CpResult result;
  const int d = c.dim();
  if (!is_doubly_nonnegative(c, &result.reason)) {
    result.status = CpStatus::kRejected;
    return result;
  }
  const int k = opts.k > 0 ? opts.k : vech_size(d);
  const double target = opts.tol * (1.0 + c.frobenius_norm());

  // Any factor c = f f^T; every other d x k factor is f Q for orthogonal Q.
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.matrix());
  const Vector ev = es.eigenvalues();
  Matrix f = Matrix::Zero(d, k);
  const int keep = std::min(d, k);
  for (int j = 0; j < keep; ++j) {
    const int src = d - 1 - j;  // largest eigenvalues first
    f.col(j) = es.eigenvectors().col(src) * std::sqrt(std::max(ev(src), 0.0));
  }

  auto residual_of = [&](const Matrix& b) { return (b * b.transpose() - c.matrix()).norm(); };

  RandomStream rng(opts.seed);
  Matrix best;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < opts.restarts; ++restart) {
    result.restarts_used = restart + 1;
    Matrix q = restart == 0 ? Matrix(Matrix::Identity(k, k)) : random_orthogonal(k, rng);
    // Alternate between the nonnegative orthant and the set {f Q}.
    for (int it = 0; it < opts.max_iterations; ++it) {
      const Matrix x = f * q;
      const Matrix clamped = x.cwiseMax(0.0);
      const double r = residual_of(clamped);
      if (r < best_residual) {
        best_residual = r;
        best = clamped;
      }
      if (r <= target) {
        // Converged to tolerance; keep iterating while it still pays, since
        // the convergence is linear and the extra digits are cheap.
        const double floor = 1e-14 * (1.0 + c.frobenius_norm());
        double last = r;
        Matrix cur = clamped;
        int stalled = 0;
        for (int polish = 0; polish < opts.max_iterations && best_residual > floor && stalled < 100; ++polish) {
          q = polar_orthogonal(f.transpose() * cur);
          cur = (f * q).cwiseMax(0.0);
          const Matrix& y = cur;
          const double ry = residual_of(y);
          if (ry < best_residual) {
            best_residual = ry;
            best = y;
          }
          stalled = ry < 0.999 * last ? 0 : stalled + 1;
          last = ry;
        }
        result.status = CpStatus::kFound;
        result.B = best;
        result.residual = best_residual;
        return result;
      }
      q = polar_orthogonal(f.transpose() * clamped);
    }
  }
  result.status = CpStatus::kNotFound;
  result.B = best;
  result.residual = best_residual;
  result.reason = "no nonnegative factor reached the tolerance";
  return result;
}

SubordinatorModel build_multivariate_subordinator(const Vector& mu, const SymMat& c, const CpOptions& opts) {
  if (c.dim() != mu.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "build_multivariate_subordinator: C and mu dimension mismatch");
  }
  if (c.matrix().isZero(0.0)) return build_multivariate_subordinator(mu, Matrix(Matrix::Zero(c.dim(), 1)));
  const CpResult cp = cp_factorize(c, opts);
  if (cp.status == CpStatus::kRejected) {
    throw Error(ErrorCode::kNotPsd, "build_multivariate_subordinator: C is not completely positive (" +
                                        cp.reason + ")");
  }
  if (cp.status != CpStatus::kFound) {
    throw Error(ErrorCode::kUnsupported,
                "build_multivariate_subordinator: no nonnegative factor of C found; supply B directly");
  }
  return build_multivariate_subordinator(mu, cp.B);
}

}  // namespace psou
