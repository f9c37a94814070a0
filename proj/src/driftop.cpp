#include "psou/driftop.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psou {

DriftOperator::DriftOperator(Matrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols() || a_.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "DriftOperator: A must be square with d >= 1");
  }
  require_finite(a_, "DriftOperator");
  generator_ = kronecker_sum(a_);
}

SymMat DriftOperator::apply(const SymMat& x) const {
  if (x.dim() != dim()) throw Error(ErrorCode::kDimensionMismatch, "apply_drift: dimension mismatch");
  return SymMat::symmetrize(a_ * x.matrix() + x.matrix() * a_.transpose());
}

SymMat DriftOperator::semigroup(double t, const SymMat& x) const {
  if (x.dim() != dim()) throw Error(ErrorCode::kDimensionMismatch, "semigroup_apply: dimension mismatch");
  if (t == 0.0) return x;
  const Matrix e = propagator(t);
  return SymMat::symmetrize(e * x.matrix() * e.transpose());
}

namespace {

Vector lu_solve_checked(const Matrix& g, const Vector& rhs, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(g);
  // Eigen's estimate misses exactly zero pivots, so also bound it by the
  // pivot ratio of U.
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double pivot_ratio = pivots.maxCoeff() > 0.0 ? pivots.minCoeff() / pivots.maxCoeff() : 0.0;
  const double rcond = std::min(lu.rcond(), pivot_ratio);
  if (!(rcond >= kMinReciprocalCondition)) {
    throw Error(ErrorCode::kSingularOperator,
                std::string(what) + ": operator is singular (reciprocal condition " +
                    std::to_string(rcond) + "); some eigenvalue pair sums to zero");
  }
  return lu.solve(rhs);
}

}  // namespace

SymMat DriftOperator::solve(const SymMat& y) const {
  if (y.dim() != dim()) throw Error(ErrorCode::kDimensionMismatch, "solve_drift_equation: dimension mismatch");
  const Vector x = lu_solve_checked(generator_, vec(y.matrix()), "solve_drift_equation");
  return SymMat::symmetrize(unvec(x, dim()));
}

Matrix DriftOperator::solve_big(const Matrix& w) const {
  const int n = dim() * dim();
  if (w.rows() != n || w.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "solve_drift_equation(big): rhs must be d^2 x d^2");
  }
  const Matrix big_generator = kronecker_sum(generator_);
  const Vector v = lu_solve_checked(big_generator, vec(w), "solve_drift_equation(big)");
  const Matrix out = unvec(v, n);
  return 0.5 * (out + out.transpose());
}

StabilityReport DriftOperator::stability() const {
  Eigen::EigenSolver<Matrix> es(a_, false);
  StabilityReport report;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) report.spectrum.push_back(es.eigenvalues()(i));
  std::sort(report.spectrum.begin(), report.spectrum.end(),
            [](const auto& l, const auto& r) {
              return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
            });
  report.margin = report.spectrum.back().real();
  for (const auto& ev : report.spectrum) report.margin = std::max(report.margin, ev.real());
  report.stable = report.margin < 0.0;
  return report;
}

SymMat apply_drift(const DriftOperator& op, const SymMat& x) { return op.apply(x); }

SymMat semigroup_apply(const DriftOperator& op, double t, const SymMat& x) {
  return op.semigroup(t, x);
}

Matrix generator_matrix(const DriftOperator& op) { return op.generator(); }

StabilityReport stability_margin(const DriftOperator& op) { return op.stability(); }

DriftSolution solve_drift_equation(const DriftOperator& op, const Matrix& rhs, SolveLevel level) {
  DriftSolution out;
  if (level == SolveLevel::kSmall) {
    out.small = op.solve(SymMat(rhs));
  } else {
    out.big = op.solve_big(rhs);
  }
  return out;
}

DriftOperator recover_from_basis_action(const std::vector<SymMat>& images) {
  const int d = static_cast<int>(images.size());
  if (d < 1) throw Error(ErrorCode::kInvalidArgument, "recover_from_basis_action: no images");
  Matrix a = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const SymMat& img = images[i];
    if (img.dim() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "recover_from_basis_action: image dimension mismatch");
    }
    // Only row/column i of A E^(ii) + E^(ii) A^T may be nonzero.
    const double tol = 1e-12 * (1.0 + img.matrix().cwiseAbs().maxCoeff());
    for (int k = 0; k < d; ++k) {
      for (int l = 0; l < d; ++l) {
        if (k != i && l != i && std::abs(img(k, l)) > tol) {
          throw Error(ErrorCode::kInvalidArgument,
                      "recover_from_basis_action: image " + std::to_string(i) +
                          " is not of the form A E^(ii) + E^(ii) A^T");
        }
      }
    }
    a(i, i) = 0.5 * img(i, i);
    for (int k = 0; k < d; ++k) {
      if (k != i) a(k, i) = img(k, i);
    }
  }
  return DriftOperator(std::move(a));
}

Matrix congruence_factor(const SemigroupProbe& semigroup, int d, double t) {
  const SymMat e11 = semigroup(t, SymMat::basis(d, 0, 0));
  if (e11.dim() != d) throw Error(ErrorCode::kDimensionMismatch, "extract_generator: probe dimension mismatch");
  const double corner = e11(0, 0);
  if (!(corner > 0.0)) {
    throw Error(ErrorCode::kWindowShrink, "extract_generator: (e^{At} E^(11))_11 <= 0 at t = " +
                                              std::to_string(t));
  }
  Matrix f(d, d);
  const double f11 = std::sqrt(corner);
  f(0, 0) = f11;
  for (int i = 1; i < d; ++i) f(i, 0) = e11(i, 0) / f11;
  for (int j = 1; j < d; ++j) {
    const SymMat img = semigroup(t, SymMat::basis(d, 0, j));
    f(0, j) = img(0, 0) / (2.0 * f11);
    for (int i = 1; i < d; ++i) {
      f(i, j) = img(0, i) / f11 - img(0, 0) * e11(i, 0) / (2.0 * f11 * f11 * f11);
    }
  }
  return f;
}

ExtractionResult extract_generator(const SemigroupProbe& semigroup, int d, const ExtractOptions& opts) {
  if (d < 1) throw Error(ErrorCode::kInvalidArgument, "extract_generator: d must be >= 1");
  const double image_scale = semigroup(opts.base_step, SymMat::basis(d, 0, 0)).frobenius_norm();
  double h = opts.base_step * (1.0 + image_scale);

  for (int attempt = 0; attempt <= opts.max_halvings; ++attempt, h *= 0.5) {
    Matrix fp1, fm1, fp2, fm2;
    try {
      fp1 = congruence_factor(semigroup, d, h);
      fm1 = congruence_factor(semigroup, d, -h);
      fp2 = congruence_factor(semigroup, d, 2.0 * h);
      fm2 = congruence_factor(semigroup, d, -2.0 * h);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kWindowShrink) continue;
      throw;
    }
    const Matrix central1 = (fp1 - fm1) / (2.0 * h);
    const Matrix central2 = (fp2 - fm2) / (4.0 * h);
    Matrix a = (4.0 * central1 - central2) / 3.0;

    // The factor must reproduce the semigroup on every basis element.
    double residual = 0.0;
    for (int j = 0; j < d; ++j) {
      for (int i = j; i < d; ++i) {
        const SymMat x = SymMat::basis(d, i, j);
        const SymMat img = semigroup(2.0 * h, x);
        const Matrix rebuilt = fp2 * x.matrix() * fp2.transpose();
        const double r = (img.matrix() - rebuilt).norm() / (1.0 + img.frobenius_norm());
        residual = std::max(residual, r);
      }
    }
    if (residual > opts.representation_tol) {
      throw Error(ErrorCode::kNotRepresentable,
                  "extract_generator: semigroup is not a congruence e^{At} X e^{A^T t} (residual " +
                      std::to_string(residual) + ")");
    }
    return ExtractionResult{DriftOperator(std::move(a)), h, residual};
  }
  throw Error(ErrorCode::kWindowShrink,
              "extract_generator: positivity window not found after step halving");
}

}  // namespace psou
