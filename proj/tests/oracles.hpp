// Independent reference computations shared by the test binaries.
#ifndef QBM_TEST_ORACLES_HPP
#define QBM_TEST_ORACLES_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qbm/model.hpp"

namespace oracle {

// Adaptive Gauss-Kronrod on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13, unsigned max_depth = 12) {
  if (a == b) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, tol, &err);
}

// Fixed Talbot inversion of a Laplace transform F(s) at time t.
inline double talbot(const std::function<std::complex<double>(std::complex<double>)>& F, double t,
                     int m = 32) {
  const double r = 2.0 * m / (5.0 * t);
  double acc = 0.5 * (F(r) * std::exp(r * t)).real();
  for (int k = 1; k < m; ++k) {
    const double th = k * M_PI / m;
    const double cot = std::cos(th) / std::sin(th);
    const std::complex<double> s = r * th * std::complex<double>(cot, 1.0);
    const double sig = th + (th * cot - 1.0) * cot;
    acc += (std::exp(t * s) * F(s) * std::complex<double>(1.0, sig)).real();
  }
  return r / m * acc;
}

// Direct real-arithmetic Matsubara sum for <xi(t) q(0)>; (nu+l1)(nu+l2) = nu^2 + g nu + w0^2/M.
inline double xi_q0_direct(const qbm::PhysicalParams& p, double t, long n_terms = 1000000) {
  const long double nu = 2.0L * M_PIl / (static_cast<long double>(p.hbar) * p.beta);
  long double acc = 0.0L;
  for (long n = n_terms; n >= 1; --n) {
    const long double vn = nu * n;
    acc += vn * std::exp(-vn * t) / (vn * vn + p.gamma * vn + p.omega0_sq / p.mass);
  }
  return static_cast<double>(-2.0L * p.gamma / p.beta * acc);
}

// Pochhammer series in long double with a fixed term count.
inline std::complex<long double> hyp2f1_series(std::complex<long double> a, std::complex<long double> b,
                                               std::complex<long double> c, long double x, int terms = 200) {
  std::complex<long double> term = 1.0L, acc = 1.0L;
  for (int n = 0; n < terms; ++n) {
    term *= (a + static_cast<long double>(n)) * (b + static_cast<long double>(n)) /
            ((c + static_cast<long double>(n)) * static_cast<long double>(n + 1)) * x;
    acc += term;
  }
  return acc;
}

// Bisection root of f on [a, b] with a sign change.
inline double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 200 && b - a > 1e-15 * std::abs(b); ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

inline std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
  return v;
}

}  // namespace oracle

#endif
