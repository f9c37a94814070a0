#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psou {

enum class ErrorCode {
  kDimensionMismatch,
  kNotSymmetric,
  kNotPsd,
  kNonFinite,
  kBranchCut,
  kSingularOperator,
  kUnstableDrift,
  kWindowShrink,
  kNotRepresentable,
  kUnsupported,
  kInvalidArgument,
  kQuadrature,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. The code drives CLI exit status and error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace psou
