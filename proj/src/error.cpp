#include "grsir/error.hpp"

namespace grsir {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateResponse: return "DegenerateResponse";
    case ErrorCode::DegenerateSlice: return "DegenerateSlice";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingularBasisCovariance: return "SingularBasisCovariance";
    case ErrorCode::NoSignal: return "NoSignal";
    case ErrorCode::SubspaceTooSmall: return "SubspaceTooSmall";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::NonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegenerateIndex: return "DegenerateIndex";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularCovariance:
    case ErrorCode::SingularBasisCovariance:
    case ErrorCode::NoSignal:
    case ErrorCode::CholeskyFailure:
    case ErrorCode::NonPositiveDefinite:
    case ErrorCode::DegenerateIndex:
      return true;
    default:
      return false;
  }
}

}  // namespace grsir
