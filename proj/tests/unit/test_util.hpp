#pragma once

#include <random>

#include "psou/symcore.hpp"

namespace psou::testing {

inline Matrix random_matrix(std::mt19937_64& g, int rows, int cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(g);
  return m;
}

inline SymMat random_sym(std::mt19937_64& g, int d, double scale = 1.0) {
  return SymMat::symmetrize(random_matrix(g, d, d, -scale, scale));
}

inline PsdMat random_psd(std::mt19937_64& g, int d, double ridge = 0.1) {
  const Matrix f = random_matrix(g, d, d);
  return require_psd(SymMat::symmetrize(f * f.transpose() + ridge * Matrix::Identity(d, d)));
}

/// Random matrix whose spectrum has real parts <= -margin.
inline Matrix random_stable(std::mt19937_64& g, int d, double margin = 0.3) {
  Matrix a = random_matrix(g, d, d);
  const double shift = a.eigenvalues().real().maxCoeff() + margin;
  return a - shift * Matrix::Identity(d, d);
}

/// exp(M) by a long Taylor series after scaling; a slow reference.
inline Matrix taylor_exp(const Matrix& m) {
  int s = 0;
  double n = m.cwiseAbs().rowwise().sum().maxCoeff();
  while (n > 0.5) {
    n /= 2.0;
    ++s;
  }
  const Matrix x = m / std::ldexp(1.0, s);
  Matrix term = Matrix::Identity(m.rows(), m.cols());
  Matrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

}  // namespace psou::testing
