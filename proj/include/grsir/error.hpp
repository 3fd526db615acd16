#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grsir {

enum class ErrorCode {
  InvalidArgument,
  DegenerateResponse,
  DegenerateSlice,
  NotSymmetric,
  SingularCovariance,
  SingularBasisCovariance,
  NoSignal,
  SubspaceTooSmall,
  CholeskyFailure,
  NonPositiveDefinite,
  OutOfRange,
  DegenerateIndex,
  DimensionTooSmall,
  DimensionMismatch,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code);

/// Numerical failures are the ones a different prior or tolerance could fix;
/// everything else is a usage or input problem.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace grsir
