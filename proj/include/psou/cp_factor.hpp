#pragma once

// Nonnegative factorization C = B B^T of completely positive matrices.

#include <cstdint>
#include <string>

#include "psou/subordinators.hpp"
#include "psou/symcore.hpp"

namespace psou {

enum class CpStatus {
  kFound,
  /// Search exhausted. Not a certificate that C is not completely positive.
  kNotFound,
  /// C is not doubly nonnegative, hence not completely positive.
  kRejected,
};

const char* to_string(CpStatus status);

struct CpOptions {
  int k = 0;  // 0 selects d(d+1)/2
  double tol = 1e-8;
  int restarts = 50;
  int max_iterations = 5000;
  std::uint64_t seed = 0x5eed;
};

struct CpResult {
  CpStatus status = CpStatus::kNotFound;
  Matrix B;  // d x k, entrywise nonnegative when status == kFound
  double residual = 0.0;  // ||B B^T - C||_F
  int restarts_used = 0;
  std::string reason;
};

/// PSD and entrywise nonnegative.
bool is_doubly_nonnegative(const SymMat& c, std::string* reason = nullptr);

/// Searches for B >= 0 with ||B B^T - C||_F <= tol (1 + ||C||_F).
CpResult cp_factorize(const SymMat& c, const CpOptions& opts = {});

/// Factorizes C (throwing kNotPsd / kUnsupported on rejection or failure)
/// and builds the diagonal subordinator with mean diag(mu), covariance C.
SubordinatorModel build_multivariate_subordinator(const Vector& mu, const SymMat& c,
                                                  const CpOptions& opts = {});

}  // namespace psou
