#include "qbm/errors.hpp"

namespace qbm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveMass: return "NonPositiveMass";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::NonPositiveCurvature: return "NonPositiveCurvature";
    case ErrorCode::NegativeFriction: return "NegativeFriction";
    case ErrorCode::NegativeHbar: return "NegativeHbar";
    case ErrorCode::HbarZero: return "HbarZero";
    case ErrorCode::InvalidC: return "InvalidC";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::TailNotBounded: return "TailNotBounded";
    case ErrorCode::PoleAtChiQZero: return "PoleAtChiQZero";
    case ErrorCode::NegativeDiffusion: return "NegativeDiffusion";
    case ErrorCode::PoleWindow: return "PoleWindow";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::NonFiniteCoefficient: return "NonFiniteCoefficient";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TableErrors: return "TableErrors";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveMass:
    case ErrorCode::NonPositiveTemperature:
    case ErrorCode::NonPositiveCurvature:
    case ErrorCode::NegativeFriction:
    case ErrorCode::NegativeHbar:
    case ErrorCode::HbarZero:
    case ErrorCode::InvalidC:
    case ErrorCode::GridMismatch:
    case ErrorCode::InvalidArgument:
      return true;
    default:
      return false;
  }
}

}  // namespace qbm
