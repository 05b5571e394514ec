#ifndef QBM_SPECIAL_HPP
#define QBM_SPECIAL_HPP

#include <cmath>
#include <complex>
#include <vector>

#include "qbm/model.hpp"

namespace qbm {

/// Neumaier-compensated accumulator.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar x) {
    const Scalar s = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - s) + x;
    } else {
      carry_ += (x - s) + sum_;
    }
    sum_ = s;
  }
  Scalar value() const { return sum_ + carry_; }

 private:
  Scalar sum_{};
  Scalar carry_{};
};

/// Componentwise compensated sum of complex values.
template <typename Scalar>
class CompensatedSum<std::complex<Scalar>> {
 public:
  void add(std::complex<Scalar> z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  std::complex<Scalar> value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum<Scalar> re_;
  CompensatedSum<Scalar> im_;
};

// ---------------------------------------------------------------------------
// Gauss hypergeometric series

struct Hyp2F1Args {
  std::complex<double> a;
  std::complex<double> b;
  std::complex<double> c;
  double x = 0.0;  // in [0, 1)
};

struct Hyp2F1Result {
  std::complex<double> value;
  int terms = 0;
  double error_bound = 0.0;  // bound on the dropped remainder
};

/// Direct Pochhammer series sum_n (a)_n (b)_n / (c)_n x^n / n!.
/// Stops once a rigorous ratio bound puts the remainder below tol.
/// Throws InvalidC for c in {0, -1, -2, ...} and NoConvergence when
/// max_terms is exhausted (x close to 1).
Hyp2F1Result hyp2f1(const Hyp2F1Args& args, double tol, int max_terms = 200000);

/// F(B) = 2F1(1; B; B+1; x) together with dF/dB.
struct ShiftedHyp2F1 {
  std::complex<double> value;
  std::complex<double> d_dB;
  int terms = 0;
};
ShiftedHyp2F1 hyp2f1_unit_shifted(std::complex<double> b, double x, double tol,
                                  int max_terms = 200000);

// ---------------------------------------------------------------------------
// Initial system-bath correlation <xi(t) q(0)>

struct CorrelationSum {
  double value = 0.0;
  double tail_bound = 0.0;
  long terms = 0;
  double imag_residue = 0.0;  // |Im| before the real cast
};

/// Matsubara sum -(2 gamma/beta) sum_{n<=n_max} nu_n e^{-nu_n t} / ((nu_n+l1)(nu_n+l2)).
/// n_max = 0 picks the smallest order whose certified tail is below tol.
/// Throws HbarZero, or TailNotBounded when tol cannot be met.
CorrelationSum xi_q0_sum(const PhysicalParams& p, double t, long n_max, double tol);

/// Hypergeometric closed form of the same correlation (x = e^{-nu t}).
/// Refuses x > 0.99 with NoConvergence; callers fall back to xi_q0_sum.
double xi_q0_closed(const PhysicalParams& p, double t, double tol = 1e-15);

/// Closed form where it converges, large-order sum otherwise.
double xi_q0(const PhysicalParams& p, double t, double tol = 1e-15);

// ---------------------------------------------------------------------------
// Stationary quantum noise kernel

/// Real stationary kernel -(gamma M nu / 2 beta) / sinh^2(nu tau / 2), tau > 0.
double noise_kernel(const PhysicalParams& p, double tau);

/// Truncated expansion kernel(tau) = sum_n prefactor_n e^{-rate_n tau}.
struct ModeExpansion {
  std::vector<std::complex<double>> prefactors;
  std::vector<double> rates;
  int n_max = 0;
  double t_min = 0.0;
  double tail_bound = 0.0;  // valid for every tau >= t_min

  double evaluate(double tau) const;
};

ModeExpansion noise_kernel_modes(const PhysicalParams& p, int n_max, double t_min);

/// Smallest mode count whose tail bound on tau >= t_min is below tol.
int noise_kernel_order(const PhysicalParams& p, double t_min, double tol);

// ---------------------------------------------------------------------------
// Polygamma functions of complex argument (Re z > 0 after recurrence).

std::complex<double> digamma(std::complex<double> z);
std::complex<double> trigamma(std::complex<double> z);

/// psi(x) - psi(x - w) with relative accuracy that survives w -> 0.
/// Requires Re(x) >= 1/2 and Re(x - w) >= 1/2.
std::complex<double> digamma_difference(std::complex<double> x, std::complex<double> w);

/// e^z - 1 without cancellation for small |z|.
std::complex<double> expm1(std::complex<double> z);

}  // namespace qbm

#endif  // QBM_SPECIAL_HPP
