#include "qbm/response.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qbm/errors.hpp"

namespace qbm {

namespace {

// k-th zero of chi_q for underdamped parameters.
double chi_q_zero(const PhysicalParams& p, long k) {
  const double w = std::sqrt(-p.omega_sq);
  return 2.0 / w * (std::numbers::pi - std::atan2(w, p.gamma) + std::numbers::pi * static_cast<double>(k));
}

}  // namespace

double omega_drift(const PhysicalParams& p, double t) {
  const auto s = susceptibilities(p, t);
  // chi_q carries the overall e^{-gt/2}; compare against the same scale.
  const double scale = std::exp(-0.5 * p.gamma * t);
  if (p.regime == Regime::Underdamped && std::abs(s.chi_q) <= 1e-13 * scale) {
    const double pole = nearest_chi_q_zero(p, t);
    std::ostringstream os;
    os << "chi_q vanishes at t = " << t << " (nearest pole " << pole << ")";
    throw PoleError(os.str(), pole);
  }
  return s.chi_q_dot / s.chi_q;
}

double relaxation_rate(const PhysicalParams& p, double t) {
  const std::complex<double> x = detail::half_omega<double>(p) * t;
  const std::complex<double> shc = detail::sinhc(x);
  const std::complex<double> denom = std::cosh(x) + 0.5 * p.gamma * t * shc;
  const double value = (p.restoring_rate() * t * shc / denom).real();
  if (!std::isfinite(value)) {
    const double pole = nearest_chi_q_zero(p, t);
    throw PoleError("closed-form Omega diverges", pole);
  }
  return value;
}

double relaxation_rate_limit(const PhysicalParams& p) {
  if (p.regime == Regime::Underdamped) {
    throw Error(ErrorCode::InvalidArgument, "Omega has no long-time limit in the underdamped regime");
  }
  const double w = p.regime == Regime::Critical ? 0.0 : std::sqrt(p.omega_sq);
  return 2.0 * p.restoring_rate() / (p.gamma + w);
}

double drift_velocity(const PhysicalParams& p, double t, double q0, double v0) {
  const auto s = susceptibilities(p, t);
  return s.chi_q_dot * q0 + s.chi_v_dot * v0;
}

std::vector<double> chi_q_zeros(const PhysicalParams& p, double t_lo, double t_hi) {
  std::vector<double> zeros;
  if (p.regime != Regime::Underdamped || t_hi < t_lo) return zeros;
  const double w = std::sqrt(-p.omega_sq);
  const double period = 2.0 * std::numbers::pi / w;
  long k = std::max(0L, static_cast<long>(std::floor((t_lo - chi_q_zero(p, 0)) / period)));
  for (;; ++k) {
    const double z = chi_q_zero(p, k);
    if (z > t_hi) break;
    if (z >= t_lo) zeros.push_back(z);
  }
  return zeros;
}

double nearest_chi_q_zero(const PhysicalParams& p, double t) {
  if (p.regime != Regime::Underdamped) return std::numeric_limits<double>::infinity();
  const double w = std::sqrt(-p.omega_sq);
  const double period = 2.0 * std::numbers::pi / w;
  const long k = std::max(0L, std::lround((t - chi_q_zero(p, 0)) / period));
  double best = chi_q_zero(p, k);
  if (k > 0 && std::abs(chi_q_zero(p, k - 1) - t) < std::abs(best - t)) best = chi_q_zero(p, k - 1);
  if (std::abs(chi_q_zero(p, k + 1) - t) < std::abs(best - t)) best = chi_q_zero(p, k + 1);
  return best;
}

}  // namespace qbm
