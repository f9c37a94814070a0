#pragma once

// Symmetric-matrix substrate: SymMat/PsdMat value types, vec/vech,
// commutation and duplication matrices, matrix exp/log, PSD checks.

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "psou/error.hpp"

namespace psou {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPsdTol = 1e-10;
inline constexpr double kSymmetryTol = 1e-9;

/// Symmetric d x d matrix. Entries are exactly symmetric after construction.
class SymMat {
 public:
  SymMat() = default;

  /// Symmetrizes inputs within kSymmetryTol * (1 + max|m_ij|) of symmetric,
  /// throws kNotSymmetric otherwise.
  explicit SymMat(const Matrix& m);

  static SymMat zero(int d);
  static SymMat identity(int d);
  /// (m + m^T)/2 with no tolerance check. For results that are symmetric in
  /// exact arithmetic.
  static SymMat symmetrize(const Matrix& m);
  /// E^(ij) + E^(ji) for i != j, E^(ii) for i == j.
  static SymMat basis(int d, int i, int j);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double frobenius_norm() const { return m_.norm(); }
  double trace() const { return m_.trace(); }

  /// Eigenvalues in ascending order (symmetric tridiagonal QR).
  Vector eigenvalues() const;
  double min_eigenvalue() const;

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator*(double s) const;
  SymMat& operator+=(const SymMat& o);

  bool operator==(const SymMat& o) const { return m_ == o.m_; }

 private:
  Matrix m_;
};

inline SymMat operator*(double s, const SymMat& x) { return x * s; }

/// A SymMat certified positive semidefinite; eig_floor is the smallest
/// eigenvalue found at certification.
class PsdMat {
 public:
  const SymMat& base() const { return base_; }
  const Matrix& matrix() const { return base_.matrix(); }
  int dim() const { return base_.dim(); }
  double eig_floor() const { return eig_floor_; }

  /// Symmetric square root; eigenvalues in [-kPsdTol, 0] are clipped to zero.
  Matrix sqrt() const;

 private:
  friend std::optional<PsdMat> psd_check(const SymMat& x, double tol);
  PsdMat(SymMat base, double floor) : base_(std::move(base)), eig_floor_(floor) {}

  SymMat base_;
  double eig_floor_ = 0.0;
};

/// Accepts iff the smallest eigenvalue is >= -tol. Throws kNonFinite on
/// non-finite entries.
std::optional<PsdMat> psd_check(const SymMat& x, double tol = kPsdTol);
/// Like psd_check but throws kNotPsd on rejection.
PsdMat require_psd(const SymMat& x, double tol = kPsdTol);
/// Scale-aware tolerance tol * (1 + ||x||_F).
double scaled_psd_tol(const SymMat& x, double tol = kPsdTol);
/// Smallest eigenvalue > +tol.
bool is_positive_definite(const SymMat& x, double tol = kPsdTol);

struct HalfVec {
  int dim = 0;
  Vector data;  // length d(d+1)/2, column-major lower triangle
};

inline int vech_size(int d) { return d * (d + 1) / 2; }

HalfVec vech(const SymMat& x);
SymMat unvech(const HalfVec& h);
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, int d);

/// Permutation matrix with K vec(A) = vec(A^T).
class CommutationMatrix {
 public:
  explicit CommutationMatrix(int d);

  int dim() const { return d_; }
  const Matrix& matrix() const { return matrix_; }
  /// Row r of the matrix has its single 1 in column perm()[r].
  const std::vector<int>& perm() const { return perm_; }
  Vector apply(const Vector& v) const;

 private:
  int d_;
  std::vector<int> perm_;
  Matrix matrix_;
};

CommutationMatrix commutation_matrix(int d);

/// D_d with vec(X) = D_d vech(X) for symmetric X.
Matrix duplication_matrix(int d);
/// Moore-Penrose inverse of D_d: vech(X) = D_d^+ vec(X).
Matrix duplication_pinv(int d);

Matrix kron(const Matrix& a, const Matrix& b);
/// a (x) I + I (x) a.
Matrix kronecker_sum(const Matrix& a);

/// e^{M t} by scaling and squaring with Pade approximants.
Matrix matrix_exponential(const Matrix& m, double t = 1.0);
/// Principal logarithm. Throws kBranchCut when an eigenvalue lies on the
/// closed negative real axis (within a relative tolerance).
Matrix matrix_logarithm(const Matrix& m);

/// max |a_ij - b_ij|
double max_abs_diff(const Matrix& a, const Matrix& b);

void require_finite(const Matrix& m, const char* what);

}  // namespace psou
