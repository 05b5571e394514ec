#ifndef QBM_ERRORS_HPP
#define QBM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qbm {

enum class ErrorCode {
  NonPositiveMass,
  NonPositiveTemperature,
  NonPositiveCurvature,
  NegativeFriction,
  NegativeHbar,
  HbarZero,
  InvalidC,
  NoConvergence,
  TailNotBounded,
  PoleAtChiQZero,
  NegativeDiffusion,
  PoleWindow,
  CFLViolation,
  NonFiniteCoefficient,
  NonFiniteState,
  DegenerateVariance,
  GridMismatch,
  InvalidArgument,
  TableErrors,
};

const char* to_string(ErrorCode code);

// Input errors map to CLI exit code 1, everything else to 2.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when Omega(t) = chi_q_dot/chi_q is evaluated at a zero of chi_q.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, double nearest_pole)
      : Error(ErrorCode::PoleAtChiQZero, what), nearest_pole_(nearest_pole) {}

  double nearest_pole() const noexcept { return nearest_pole_; }

 private:
  double nearest_pole_;
};

}  // namespace qbm

#endif  // QBM_ERRORS_HPP
