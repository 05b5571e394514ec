#ifndef QBM_RESPONSE_HPP
#define QBM_RESPONSE_HPP

#include <cmath>
#include <complex>
#include <vector>

#include "qbm/model.hpp"

namespace qbm {

/// chi_q, chi_v and their time derivatives at one instant.
template <typename Scalar>
struct SusceptibilitySet {
  Scalar chi_q;
  Scalar chi_v;
  Scalar chi_q_dot;
  Scalar chi_v_dot;
  Scalar imag_residue;  // largest |Im| discarded by the real cast
};

namespace detail {

// sinh(x)/x with a Taylor branch near the origin.
template <typename Scalar>
std::complex<Scalar> sinhc(std::complex<Scalar> x) {
  if (std::abs(x) < Scalar(1e-4)) {
    const std::complex<Scalar> x2 = x * x;
    return Scalar(1) + x2 / Scalar(6) + x2 * x2 / Scalar(120);
  }
  return std::sinh(x) / x;
}

template <typename Scalar>
std::complex<Scalar> half_omega(const PhysicalParams& p) {
  if (p.regime == Regime::Critical) return {};
  const Scalar g = static_cast<Scalar>(p.gamma);
  const Scalar rate = static_cast<Scalar>(p.omega0_sq) / static_cast<Scalar>(p.mass);
  const Scalar w2 = g * g - Scalar(4) * rate;
  return std::sqrt(std::complex<Scalar>(w2, Scalar(0))) / Scalar(2);
}

}  // namespace detail

/// All four response functions through one complex-omega evaluation.
/// Overdamped, critical (omega = 0) and underdamped (omega = i|omega|)
/// share the same expression; the result is cast to real.
template <typename Scalar = double>
SusceptibilitySet<Scalar> susceptibilities(const PhysicalParams& p, Scalar t) {
  using C = std::complex<Scalar>;
  const Scalar g = static_cast<Scalar>(p.gamma);
  const Scalar rate = static_cast<Scalar>(p.omega0_sq) / static_cast<Scalar>(p.mass);
  const C x = detail::half_omega<Scalar>(p) * t;
  const Scalar half_gt = g * t / Scalar(2);

  C ch_decay;   // e^{-gt/2} cosh(x)
  C shc_decay;  // e^{-gt/2} sinh(x)/x
  if (std::abs(x) < Scalar(1e-4)) {
    const Scalar decay = std::exp(-half_gt);
    ch_decay = std::cosh(x) * decay;
    shc_decay = detail::sinhc(x) * decay;
  } else {
    // exponent sums keep large overdamped times finite
    const C ep = std::exp(x - half_gt);
    const C em = std::exp(-x - half_gt);
    ch_decay = (ep + em) / Scalar(2);
    shc_decay = (ep - em) / (Scalar(2) * x);
  }

  const C chi_v = t * shc_decay;
  const C chi_q = ch_decay + half_gt * shc_decay;
  const C chi_v_dot = ch_decay - half_gt * shc_decay;

  SusceptibilitySet<Scalar> s;
  s.chi_q = chi_q.real();
  s.chi_v = chi_v.real();
  s.chi_v_dot = chi_v_dot.real();
  s.chi_q_dot = -rate * s.chi_v;
  using std::abs;
  s.imag_residue = std::max({abs(chi_q.imag()), abs(chi_v.imag()), abs(chi_v_dot.imag())});
  return s;
}

template <typename Scalar = double>
Scalar chi_q(const PhysicalParams& p, Scalar t) { return susceptibilities(p, t).chi_q; }

template <typename Scalar = double>
Scalar chi_v(const PhysicalParams& p, Scalar t) { return susceptibilities(p, t).chi_v; }

template <typename Scalar = double>
Scalar chi_q_dot(const PhysicalParams& p, Scalar t) { return susceptibilities(p, t).chi_q_dot; }

template <typename Scalar = double>
Scalar chi_v_dot(const PhysicalParams& p, Scalar t) { return susceptibilities(p, t).chi_v_dot; }

/// Drift function Omega(t) = chi_q_dot / chi_q. Negative for t > 0 in the
/// overdamped regime. Throws PoleError at zeros of chi_q (underdamped only).
double omega_drift(const PhysicalParams& p, double t);

/// The positive closed form (2 w0^2/(M w)) sinh(wt/2) / (cosh(wt/2) + (g/w) sinh(wt/2)).
/// Equals -omega_drift(p, t).
double relaxation_rate(const PhysicalParams& p, double t);

/// Long-time limit of relaxation_rate in the overdamped regime, 2 w0^2/(M(g + w)).
double relaxation_rate_limit(const PhysicalParams& p);

/// Mean velocity chi_q_dot q0 + chi_v_dot v0 of the conditional density.
double drift_velocity(const PhysicalParams& p, double t, double q0, double v0);

/// Zeros of chi_q in [t_lo, t_hi], ascending. Empty unless underdamped.
std::vector<double> chi_q_zeros(const PhysicalParams& p, double t_lo, double t_hi);

/// Zero of chi_q closest to t, or +inf when chi_q never vanishes.
double nearest_chi_q_zero(const PhysicalParams& p, double t);

}  // namespace qbm

#endif  // QBM_RESPONSE_HPP
