#include "qbm/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qbm/errors.hpp"

namespace qbm {

namespace {

using cplx = std::complex<double>;

bool is_nonpositive_integer(cplx c) {
  return c.imag() == 0.0 && c.real() <= 0.0 && c.real() == std::round(c.real());
}

void check_unit_interval(double x) {
  if (!(x >= 0.0 && x < 1.0)) {
    std::ostringstream os;
    os << "hypergeometric argument x = " << x << " outside [0, 1)";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

}  // namespace

Hyp2F1Result hyp2f1(const Hyp2F1Args& args, double tol, int max_terms) {
  check_unit_interval(args.x);
  if (is_nonpositive_integer(args.c)) {
    throw Error(ErrorCode::InvalidC, "c is a non-positive integer");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");

  const double abs_a = std::abs(args.a);
  const double abs_b = std::abs(args.b);
  const double abs_c = std::max(std::abs(args.c), 1.0);

  CompensatedSum<cplx> sum;
  cplx term{1.0, 0.0};
  sum.add(term);
  double abs_total = 1.0;
  for (int n = 0;; ++n) {
    if (n >= max_terms) {
      std::ostringstream os;
      os << "series not converged after " << max_terms << " terms at x = " << args.x;
      throw Error(ErrorCode::NoConvergence, os.str());
    }
    const double dn = n;
    term *= (args.a + dn) * (args.b + dn) / ((args.c + dn) * (dn + 1.0)) * args.x;
    sum.add(term);
    abs_total += std::abs(term);
    if (term == cplx{}) {
      return {sum.value(), n + 2, abs_total * std::numeric_limits<double>::epsilon()};
    }
    // For m > |c| the ratio |t_{m+1}/t_m| is bounded by a decreasing function of m.
    const double m = dn + 1.0;
    if (m > abs_c) {
      const double rho = args.x * (m + abs_a) * (m + abs_b) / ((m - abs_c) * (m + 1.0));
      if (rho < 1.0) {
        const double bound = std::abs(term) * rho / (1.0 - rho);
        if (bound <= tol) {
          return {sum.value(), n + 2, bound + abs_total * std::numeric_limits<double>::epsilon()};
        }
      }
    }
  }
}

ShiftedHyp2F1 hyp2f1_unit_shifted(cplx b, double x, double tol, int max_terms) {
  check_unit_interval(x);
  if (is_nonpositive_integer(b)) throw Error(ErrorCode::InvalidC, "b is a non-positive integer");
  const double abs_b = std::abs(b);
  CompensatedSum<cplx> f;
  CompensatedSum<cplx> df;
  double xk = 1.0;
  for (int k = 0;; ++k) {
    if (k >= max_terms) throw Error(ErrorCode::NoConvergence, "shifted series not converged");
    const cplx denom = b + static_cast<double>(k);
    f.add(b / denom * xk);
    df.add(static_cast<double>(k) / (denom * denom) * xk);
    xk *= x;
    const double kn = k + 1.0;
    if (xk == 0.0) return {f.value(), df.value(), k + 1};
    if (kn > abs_b + 1.0) {
      const double tail_f = abs_b / (kn - abs_b) * xk / (1.0 - x);
      const double tail_d = kn / ((kn - abs_b) * (kn - abs_b)) * xk / (1.0 - x);
      if (tail_f <= tol && tail_d <= tol) return {f.value(), df.value(), k + 1};
    }
  }
}

// ---------------------------------------------------------------------------

CorrelationSum xi_q0_sum(const PhysicalParams& p, double t, long n_max, double tol) {
  const double nu = p.nu();
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "xi_q0_sum requires t > 0");
  const double x = std::exp(-nu * t);
  const double scale = 2.0 * p.gamma / p.beta;

  // |nu_n + lambda| >= nu_n because Re(lambda) >= 0, so each term is <= e^{-nu_n t}/nu_n.
  auto tail = [&](long n) {
    const double head = std::exp(-nu * t * static_cast<double>(n + 1));
    return scale * head / (nu * static_cast<double>(n + 1) * (1.0 - x));
  };

  constexpr long kBudget = 50'000'000;
  if (n_max <= 0) {
    n_max = 1;
    while (tail(n_max) > tol) {
      n_max = std::max(n_max + 1, static_cast<long>(n_max * 1.5));
      if (n_max > kBudget) {
        std::ostringstream os;
        os << "nu*t = " << nu * t << " too small to reach tol " << tol;
        throw Error(ErrorCode::TailNotBounded, os.str());
      }
    }
  }
  const double bound = tail(n_max);
  if (bound > tol) {
    std::ostringstream os;
    os << "tail bound " << bound << " exceeds tol " << tol << " at n_max = " << n_max;
    throw Error(ErrorCode::TailNotBounded, os.str());
  }

  CompensatedSum<cplx> sum;
  for (long n = 1; n <= n_max; ++n) {
    const double nun = nu * static_cast<double>(n);
    const double decay = std::exp(-nun * t);
    if (decay == 0.0) break;
    sum.add(nun * decay / ((nun + p.lambda1) * (nun + p.lambda2)));
  }
  const cplx total = -scale * sum.value();
  return {total.real(), bound, n_max, std::abs(total.imag())};
}

double xi_q0_closed(const PhysicalParams& p, double t, double tol) {
  const double nu = p.nu();
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "xi_q0_closed requires t > 0");
  const double x = std::exp(-nu * t);
  if (x > 0.99) {
    std::ostringstream os;
    os << "x = e^{-nu t} = " << x << " > 0.99; use the Matsubara sum";
    throw Error(ErrorCode::NoConvergence, os.str());
  }
  if (x == 0.0) return 0.0;

  // sum_n nu_n x^n/((nu_n+l1)(nu_n+l2)) = x [phi(l1) - phi(l2)]/(l1 - l2) with
  // phi(l) = l/(l+nu) 2F1(1; a; b; x), a = (l+nu)/nu, b = a + 1.
  auto phi = [&](cplx l) {
    const cplx a = (l + nu) / nu;
    const Hyp2F1Result f = hyp2f1({1.0, a, a + 1.0, x}, tol);
    return l / (l + nu) * f.value;
  };
  auto phi_prime = [&](cplx l) {
    const ShiftedHyp2F1 f = hyp2f1_unit_shifted((l + nu) / nu, x, tol);
    const cplx s = l + nu;
    return f.value * nu / (s * s) + l / s * f.d_dB / nu;
  };

  const cplx l1 = p.lambda1;
  const cplx l2 = p.lambda2;
  cplx divided;
  const double split = std::abs(l1 - l2);
  if (p.regime == Regime::Critical || split <= 1e-5 * std::max(std::abs(l1), nu)) {
    divided = phi_prime(0.5 * (l1 + l2));
  } else {
    divided = (phi(l1) - phi(l2)) / (l1 - l2);
  }
  return (-2.0 * p.gamma / p.beta * x * divided).real();
}

double xi_q0(const PhysicalParams& p, double t, double tol) {
  const double nu = p.nu();
  if (std::exp(-nu * t) <= 0.99) return xi_q0_closed(p, t, tol);
  const double abs_tol = tol * 2.0 * p.gamma / (p.beta * nu);
  return xi_q0_sum(p, t, 0, std::max(abs_tol, 1e-300)).value;
}

// ---------------------------------------------------------------------------

double noise_kernel(const PhysicalParams& p, double tau) {
  const double nu = p.nu();
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise kernel evaluated at tau <= 0");
  // 1/sinh^2(nu tau/2) = 4 y/(1-y)^2 with y = e^{-nu tau}
  const double y = std::exp(-nu * tau);
  const double one_minus_y = -std::expm1(-nu * tau);
  return -(p.gamma * p.mass * nu / (2.0 * p.beta)) * 4.0 * y / (one_minus_y * one_minus_y);
}

namespace {

double kernel_tail(const PhysicalParams& p, int n_max, double t_min) {
  const double nu = p.nu();
  const double y = std::exp(-nu * t_min);
  const double one_minus_y = -std::expm1(-nu * t_min);
  const double n = n_max;
  // sum_{k>n} k y^k = y^{n+1} ((n+1) - n y)/(1-y)^2
  const double geometric = std::pow(y, n + 1.0) * ((n + 1.0) - n * y) / (one_minus_y * one_minus_y);
  return 2.0 * p.gamma * p.mass * nu / p.beta * geometric;
}

}  // namespace

double ModeExpansion::evaluate(double tau) const {
  CompensatedSum<double> sum;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    sum.add((prefactors[i] * std::exp(-rates[i] * tau)).real());
  }
  return sum.value();
}

ModeExpansion noise_kernel_modes(const PhysicalParams& p, int n_max, double t_min) {
  const double nu = p.nu();
  if (!(t_min > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_min must be positive");
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  ModeExpansion modes;
  modes.n_max = n_max;
  modes.t_min = t_min;
  modes.prefactors.reserve(n_max);
  modes.rates.reserve(n_max);
  const double weight = -2.0 * p.gamma * p.mass * nu / p.beta;
  for (int n = 1; n <= n_max; ++n) {
    modes.prefactors.emplace_back(weight * n, 0.0);
    modes.rates.push_back(nu * n);
  }
  modes.tail_bound = kernel_tail(p, n_max, t_min);
  return modes;
}

int noise_kernel_order(const PhysicalParams& p, double t_min, double tol) {
  for (int n = 1; n < 100'000'000; n = std::max(n + 1, static_cast<int>(n * 1.2))) {
    if (kernel_tail(p, n, t_min) <= tol) {
      // refine downward to the smallest admissible order
      int lo = std::max(1, static_cast<int>(n / 1.2) - 1);
      while (lo < n && kernel_tail(p, lo, t_min) > tol) ++lo;
      return lo;
    }
  }
  throw Error(ErrorCode::TailNotBounded, "noise kernel tail cannot reach tolerance");
}

// ---------------------------------------------------------------------------

cplx expm1(cplx z) {
  const double x = z.real();
  const double y = z.imag();
  const double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

cplx digamma(cplx z) {
  constexpr double pi = std::numbers::pi;
  if (z.real() < 0.5) {
    return digamma(1.0 - z) - pi / std::tan(pi * z);
  }
  cplx acc{};
  while (z.real() < 12.0) {
    acc -= 1.0 / z;
    z += 1.0;
  }
  const cplx w = 1.0 / (z * z);
  // Bernoulli-number asymptotic series
  const cplx series =
      w * (1.0 / 12 -
           w * (1.0 / 120 -
                w * (1.0 / 252 -
                     w * (1.0 / 240 - w * (1.0 / 132 - w * (691.0 / 32760 - w * (1.0 / 12)))))));
  return acc + std::log(z) - 0.5 / z - series;
}

cplx trigamma(cplx z) {
  constexpr double pi = std::numbers::pi;
  if (z.real() < 0.5) {
    const cplx s = std::sin(pi * z);
    return pi * pi / (s * s) - trigamma(1.0 - z);
  }
  cplx acc{};
  while (z.real() < 12.0) {
    acc += 1.0 / (z * z);
    z += 1.0;
  }
  const cplx iz = 1.0 / z;
  const cplx w = iz * iz;
  const cplx series =
      1.0 / 6 -
      w * (1.0 / 30 - w * (1.0 / 42 - w * (1.0 / 30 - w * (5.0 / 66 - w * (691.0 / 2730 - w * (7.0 / 6))))));
  return acc + iz + 0.5 * w + w * iz * series;
}

cplx digamma_difference(cplx x, cplx w) {
  if (w == cplx{}) return {};
  cplx y = x - w;
  if (x.real() < 0.5 || y.real() < 0.5) {
    throw Error(ErrorCode::InvalidArgument, "digamma_difference needs Re(x), Re(x - w) >= 1/2");
  }
  // psi(x) - psi(y) = psi(x+1) - psi(y+1) + w / (x y)
  cplx acc{};
  while (x.real() < 12.0 || y.real() < 12.0) {
    acc += w / (x * y);
    x += 1.0;
    y += 1.0;
  }
  // ln(x/y) = 2 atanh(w / (x + y))
  acc += 2.0 * std::atanh(w / (x + y));
  acc += 0.5 * w / (x * y);
  // x^{-2k} - y^{-2k} = (1/x - 1/y) sum_j x^{-j} y^{-(2k-1-j)}
  static constexpr double kCoef[] = {1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240,
                                     1.0 / 132, -691.0 / 32760, 1.0 / 12};
  const cplx a = 1.0 / x;
  const cplx b = 1.0 / y;
  const cplx a_minus_b = -w * a * b;
  for (int k = 1; k <= 7; ++k) {
    const int n = 2 * k;
    cplx h{};
    cplx ap = 1.0;
    for (int j = 0; j < n; ++j) {
      h += ap * std::pow(b, n - 1 - j);
      ap *= a;
    }
    acc -= kCoef[k - 1] * a_minus_b * h;
  }
  return acc;
}

}  // namespace qbm
