#include "psou/symcore.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>

namespace psou {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kNotSymmetric: return "not_symmetric";
    case ErrorCode::kNotPsd: return "not_psd";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kBranchCut: return "branch_cut";
    case ErrorCode::kSingularOperator: return "singular_operator";
    case ErrorCode::kUnstableDrift: return "unstable_drift";
    case ErrorCode::kWindowShrink: return "window_shrink";
    case ErrorCode::kNotRepresentable: return "not_representable";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kQuadrature: return "quadrature";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFinite, std::string(what) + ": non-finite entries");
  }
}

SymMat::SymMat(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "SymMat: matrix must be square with d >= 1");
  }
  require_finite(m, "SymMat");
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    throw Error(ErrorCode::kNotSymmetric,
                "SymMat: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMat SymMat::zero(int d) { return SymMat(Matrix::Zero(d, d)); }

SymMat SymMat::identity(int d) { return SymMat(Matrix::Identity(d, d)); }

SymMat SymMat::symmetrize(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "SymMat: matrix must be square with d >= 1");
  }
  SymMat out;
  out.m_ = 0.5 * (m + m.transpose());
  return out;
}

SymMat SymMat::basis(int d, int i, int j) {
  Matrix m = Matrix::Zero(d, d);
  m(i, j) = 1.0;
  m(j, i) = 1.0;
  return SymMat(m);
}

Vector SymMat::eigenvalues() const {
  require_finite(m_, "eigenvalues");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kNonFinite, "eigenvalues: decomposition failed");
  }
  return es.eigenvalues();
}

double SymMat::min_eigenvalue() const { return eigenvalues()(0); }

SymMat SymMat::operator+(const SymMat& o) const {
  if (dim() != o.dim()) throw Error(ErrorCode::kDimensionMismatch, "SymMat +: dimension mismatch");
  SymMat out;
  out.m_ = m_ + o.m_;
  return out;
}

SymMat SymMat::operator-(const SymMat& o) const {
  if (dim() != o.dim()) throw Error(ErrorCode::kDimensionMismatch, "SymMat -: dimension mismatch");
  SymMat out;
  out.m_ = m_ - o.m_;
  return out;
}

SymMat SymMat::operator*(double s) const {
  SymMat out;
  out.m_ = m_ * s;
  return out;
}

SymMat& SymMat::operator+=(const SymMat& o) {
  if (dim() != o.dim()) throw Error(ErrorCode::kDimensionMismatch, "SymMat +=: dimension mismatch");
  m_ += o.m_;
  return *this;
}

Matrix PsdMat::sqrt() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(base_.matrix());
  Vector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kPsdTol) {
      throw Error(ErrorCode::kNotPsd, "PsdMat::sqrt: negative eigenvalue");
    }
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  const Matrix& u = es.eigenvectors();
  Matrix root = u * ev.asDiagonal() * u.transpose();
  return 0.5 * (root + root.transpose());
}

std::optional<PsdMat> psd_check(const SymMat& x, double tol) {
  if (tol < 0.0) throw Error(ErrorCode::kInvalidArgument, "psd_check: tol must be >= 0");
  const double floor = x.min_eigenvalue();
  if (floor < -tol) return std::nullopt;
  return PsdMat(x, floor);
}

PsdMat require_psd(const SymMat& x, double tol) {
  auto p = psd_check(x, tol);
  if (!p) {
    throw Error(ErrorCode::kNotPsd,
                "matrix is not positive semidefinite (min eigenvalue " +
                    std::to_string(x.min_eigenvalue()) + ")");
  }
  return *p;
}

double scaled_psd_tol(const SymMat& x, double tol) { return tol * (1.0 + x.frobenius_norm()); }

bool is_positive_definite(const SymMat& x, double tol) { return x.min_eigenvalue() > tol; }

HalfVec vech(const SymMat& x) {
  const int d = x.dim();
  HalfVec h{d, Vector(vech_size(d))};
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) h.data(k++) = x(i, j);
  }
  return h;
}

SymMat unvech(const HalfVec& h) {
  const int d = h.dim;
  if (d < 1 || h.data.size() != vech_size(d)) {
    throw Error(ErrorCode::kDimensionMismatch, "unvech: length does not match d(d+1)/2");
  }
  Matrix m(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      m(i, j) = h.data(k);
      m(j, i) = h.data(k);
      ++k;
    }
  }
  return SymMat(m);
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, int d) {
  if (d < 1 || v.size() != static_cast<Eigen::Index>(d) * d) {
    throw Error(ErrorCode::kDimensionMismatch, "unvec: length is not d^2");
  }
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

CommutationMatrix::CommutationMatrix(int d) : d_(d), perm_(static_cast<size_t>(d) * d) {
  if (d < 1) throw Error(ErrorCode::kInvalidArgument, "commutation_matrix: d must be >= 1");
  const int n = d * d;
  matrix_ = Matrix::Zero(n, n);
  // vec(A^T)[i + j d] = A^T(i, j) = A(j, i) = vec(A)[j + i d]
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      const int row = i + j * d;
      const int col = j + i * d;
      perm_[row] = col;
      matrix_(row, col) = 1.0;
    }
  }
}

Vector CommutationMatrix::apply(const Vector& v) const {
  if (v.size() != static_cast<Eigen::Index>(perm_.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "CommutationMatrix::apply: length mismatch");
  }
  Vector out(v.size());
  for (size_t r = 0; r < perm_.size(); ++r) out(r) = v(perm_[r]);
  return out;
}

CommutationMatrix commutation_matrix(int d) { return CommutationMatrix(d); }

Matrix duplication_matrix(int d) {
  Matrix dup = Matrix::Zero(d * d, vech_size(d));
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      dup(i + j * d, k) = 1.0;
      dup(j + i * d, k) = 1.0;
      ++k;
    }
  }
  return dup;
}

Matrix duplication_pinv(int d) {
  Matrix pinv = Matrix::Zero(vech_size(d), d * d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      if (i == j) {
        pinv(k, i + j * d) = 1.0;
      } else {
        pinv(k, i + j * d) = 0.5;
        pinv(k, j + i * d) = 0.5;
      }
      ++k;
    }
  }
  return pinv;
}

Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

Matrix kronecker_sum(const Matrix& a) {
  const Matrix eye = Matrix::Identity(a.rows(), a.cols());
  return kron(a, eye) + kron(eye, a);
}

Matrix matrix_exponential(const Matrix& m, double t) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::kDimensionMismatch, "matrix_exponential: not square");
  require_finite(m, "matrix_exponential");
  if (!std::isfinite(t)) throw Error(ErrorCode::kNonFinite, "matrix_exponential: non-finite t");
  Matrix scaled = m * t;
  Matrix out = scaled.exp();
  require_finite(out, "matrix_exponential result");
  return out;
}

Matrix matrix_logarithm(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::kDimensionMismatch, "matrix_logarithm: not square");
  require_finite(m, "matrix_logarithm");
  Eigen::EigenSolver<Matrix> es(m, false);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto ev = es.eigenvalues()(i);
    if (ev.real() <= 1e-12 * scale && std::abs(ev.imag()) <= 1e-10 * scale) {
      throw Error(ErrorCode::kBranchCut,
                  "matrix_logarithm: eigenvalue on the closed negative real axis");
    }
  }
  Matrix out = m.log();
  require_finite(out, "matrix_logarithm result");
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "max_abs_diff: shape mismatch");
  }
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace psou
