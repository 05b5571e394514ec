#include "qbm/coefficients.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "qbm/response.hpp"
#include "qbm/special.hpp"

namespace qbm {

namespace {

using cplx = std::complex<double>;

// |omega^2| below this fraction of gamma^2 is evaluated by interpolation in
// omega^2 between two non-degenerate neighbours.
constexpr double kNearCritical = 1e-5;
constexpr long kModeBudget = 20'000'000;

// sum_i coef_i e^{-rate_i u}
struct ExpSum {
  std::array<cplx, 2> coef;
  std::array<cplx, 2> rate;

  cplx at(double u) const {
    return coef[0] * std::exp(-rate[0] * u) + coef[1] * std::exp(-rate[1] * u);
  }
  double abs_coef() const { return std::abs(coef[0]) + std::abs(coef[1]); }
};

struct Roots {
  cplx l1;
  cplx l2;
  cplx diff;
};

Roots roots_of(const PhysicalParams& p) { return {p.lambda1, p.lambda2, p.lambda1 - p.lambda2}; }

ExpSum chi_v_terms(const Roots& r) { return {{1.0 / r.diff, -1.0 / r.diff}, {r.l2, r.l1}}; }
ExpSum chi_v_dot_terms(const Roots& r) { return {{-r.l2 / r.diff, r.l1 / r.diff}, {r.l2, r.l1}}; }
ExpSum chi_q_terms(const Roots& r) { return {{r.l1 / r.diff, -r.l2 / r.diff}, {r.l2, r.l1}}; }

// F(c) = int_0^t e^{-c u} du
cplx window(cplx c, double t) {
  if (c == cplx{}) return t;
  return -expm1(-c * t) / c;
}

// Divided difference F[c1, c2].
cplx window_dd(cplx c1, cplx c2, double t) {
  const double big = std::max(std::abs(c1), std::abs(c2));
  const cplx d = c2 - c1;
  if (big * t <= 4.0) {
    // t^2 sum_k (-1)^k H_{k-1}(c1 t, c2 t) / (k+1)!, H the complete homogeneous polynomial
    const cplx x1 = c1 * t;
    const cplx x2 = c2 * t;
    cplx h = 1.0;
    cplx x2pow = 1.0;
    double fact = 2.0;
    cplx acc = -0.5;
    for (int k = 2; k < 50; ++k) {
      x2pow *= x2;
      h = x2pow + x1 * h;
      fact *= k + 1;
      acc += (k % 2 == 0 ? 1.0 : -1.0) * h / fact;
    }
    return acc * t * t;
  }
  if (std::abs(d) >= 0.25 * big) return (window(c1, t) - window(c2, t)) / (c1 - c2);
  const cplx m = 0.5 * (c1 + c2);
  const cplx half = 0.5 * d * t;
  const cplx shc = std::abs(half) < 1e-4 ? 1.0 + half * half / 6.0 : std::sinh(half) / half;
  return -(1.0 - std::exp(-m * t) * (std::cosh(half) + m * t * shc)) / (c1 * c2);
}

// The rational part of the mode bracket written as sum_k weight_k z_k / (nu - z_k).
struct Pole {
  cplx weight;
  cplx z;
};

std::vector<Pole> rational_poles(const ExpSum& f, const ExpSum& g, double t) {
  std::vector<Pole> poles;
  poles.reserve(16);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const cplx p = f.rate[i];
      const cplx q = g.rate[j];
      const cplx w = 0.5 * f.coef[i] * g.coef[j] / (p + q);
      const cplx e = std::exp(-(p + q) * t);
      poles.push_back({w * e, q});
      poles.push_back({w * e, p});
      poles.push_back({-w, -p});
      poles.push_back({-w, -q});
    }
  }
  return poles;
}

// Mode bracket int_0^t f g - (nu/2) int int f(u) g(u') e^{-nu|u-u'|}, minus its
// leading 1/nu behaviour lead/nu. Direct route, for nu comparable to the rates.
cplx bracket_direct(const ExpSum& f, const ExpSum& g, double nu, double t, cplx lead) {
  cplx acc{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const cplx p = f.rate[i];
      const cplx q = g.rate[j];
      acc += f.coef[i] * g.coef[j] *
             (window(p + q, t) + 0.5 * nu * (window_dd(p + q, p + nu, t) + window_dd(p + q, q + nu, t)));
    }
  }
  return acc - lead / nu;
}

// Same bracket split into rational and exponentially small parts; needs nu >= 2 max|rate|.
cplx bracket_split(const ExpSum& f, const ExpSum& g, const std::vector<Pole>& poles, double nu,
                   double t) {
  cplx acc{};
  for (const auto& pole : poles) acc += pole.weight * pole.z * pole.z / (nu * (nu - pole.z));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const cplx p = f.rate[i];
      const cplx q = g.rate[j];
      acc -= 0.5 * nu * f.coef[i] * g.coef[j] *
             (std::exp(-(p + nu) * t) / ((p + nu) * (nu - q)) + std::exp(-(q + nu) * t) / ((q + nu) * (nu - p)));
    }
  }
  return acc;
}

// Exact sum over n > n_modes of the rational part.
cplx rational_tail(const std::vector<Pole>& poles, double nu, long n_modes) {
  const cplx x(static_cast<double>(n_modes + 1), 0.0);
  cplx acc{};
  for (const auto& pole : poles) {
    const cplx w = pole.z / nu;
    acc += pole.weight * w * digamma_difference(x, w);
  }
  return acc;
}

// Smallest n >= n_lo with bound(n) <= tol.
template <typename Bound>
long order_for(Bound&& bound, long n_lo, double tol) {
  if (bound(n_lo) <= tol) return n_lo;
  long hi = std::max(n_lo, 1L);
  while (bound(hi) > tol) {
    if (hi > kModeBudget) {
      throw Error(ErrorCode::TailNotBounded, "Matsubara tail cannot reach tolerance; increase t or tol");
    }
    hi *= 2;
  }
  long lo = hi / 2;
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (bound(mid) <= tol ? hi : lo) = mid;
  }
  return std::max(hi, n_lo);
}

// weight * sum_{n>=1} [bracket(nu_n) - lead/nu_n]
QuantumValue mode_sum(const ExpSum& f, const ExpSum& g, double weight, const PhysicalParams& p,
                      double t, const QuantumOptions& opts) {
  if (t == 0.0 || weight == 0.0) return {};
  const double nu = p.nu();
  const double x = std::exp(-nu * t);
  const double one_minus_x = -std::expm1(-nu * t);
  const double zmax = std::max(std::abs(p.lambda1), std::abs(p.lambda2));
  const long n_sep = std::max(1L, static_cast<long>(std::ceil(2.0 * zmax / nu)));
  const double ab = f.abs_coef() * g.abs_coef();
  auto bound = [&](long n) {
    return weight * ab * 2.0 * std::pow(x, static_cast<double>(n + 1)) /
           (static_cast<double>(n + 1) * nu * one_minus_x);
  };
  const long n_modes = opts.n_max > 0 ? std::max<long>(n_sep, opts.n_max) : order_for(bound, n_sep, opts.tol);
  if (n_modes > kModeBudget) throw Error(ErrorCode::TailNotBounded, "Matsubara order exceeds budget");

  const cplx lead = 0.5 * (f.at(t) * g.at(t) + f.at(0.0) * g.at(0.0));
  const auto poles = rational_poles(f, g, t);
  CompensatedSum<cplx> acc;
  for (long n = 1; n <= n_modes; ++n) {
    const double nu_n = nu * static_cast<double>(n);
    acc.add(nu_n >= 2.0 * zmax ? bracket_split(f, g, poles, nu_n, t) : bracket_direct(f, g, nu_n, t, lead));
  }
  acc.add(rational_tail(poles, nu, n_modes));
  return {weight * acc.value().real(), bound(n_modes), static_cast<int>(n_modes)};
}

// 2 int_0^t chi_q(s) <xi(s) q(0)> ds = -(4 gamma/beta) sum_n h_n sum_k c_k F(r_k + nu_n)
QuantumValue correlation_integral(const PhysicalParams& p, double t, const QuantumOptions& opts) {
  if (t == 0.0 || p.gamma == 0.0) return {};
  const double nu = p.nu();
  const double prefactor = 4.0 * p.gamma / p.beta;
  const Roots r = roots_of(p);
  const ExpSum cq = chi_q_terms(r);
  // h_n = nu_n / ((nu_n + l1)(nu_n + l2)) = sum_i alpha_i / (nu_n + l_i)
  const std::array<cplx, 2> alpha{r.l1 / r.diff, -r.l2 / r.diff};
  const std::array<cplx, 2> lam{r.l1, r.l2};

  // sum_{n>=1} 1 / ((nu_n + a)(nu_n + b))
  auto pair_sum = [&](cplx a, cplx b) -> cplx {
    if (a == b) return trigamma(1.0 + a / nu) / (nu * nu);
    return digamma_difference(1.0 + b / nu, (b - a) / nu) / (nu * (b - a));
  };
  cplx rational{};
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) rational += alpha[i] * cq.coef[k] * pair_sum(lam[i], cq.rate[k]);
  }

  const double x = std::exp(-nu * t);
  const double one_minus_x = -std::expm1(-nu * t);
  auto bound = [&](long n) {
    const double m = static_cast<double>(n + 1);
    return prefactor * cq.abs_coef() * std::pow(x, m) / (m * m * nu * nu * one_minus_x);
  };
  const long n_modes = opts.n_max > 0 ? opts.n_max : order_for(bound, 1, opts.tol);
  const double rate = p.restoring_rate();
  CompensatedSum<cplx> expo;
  for (long n = 1; n <= n_modes; ++n) {
    const double nu_n = nu * static_cast<double>(n);
    const double h = nu_n / (nu_n * nu_n + p.gamma * nu_n + rate);
    cplx s{};
    for (int k = 0; k < 2; ++k) s += cq.coef[k] * std::exp(-(cq.rate[k] + nu_n) * t) / (cq.rate[k] + nu_n);
    expo.add(h * s);
  }
  return {-prefactor * (rational - expo.value()).real(), bound(n_modes), static_cast<int>(n_modes)};
}

template <typename Fn>
QuantumValue near_critical(const PhysicalParams& p, Fn&& fn) {
  const double eps = kNearCritical * p.gamma * p.gamma;
  if (std::abs(p.omega_sq) > eps) return fn(p);
  const QuantumValue lo = fn(with_omega_sq(p, -eps));
  const QuantumValue hi = fn(with_omega_sq(p, eps));
  const double s = (p.omega_sq + eps) / (2.0 * eps);
  return {lo.value + s * (hi.value - lo.value), std::max(lo.tail_bound, hi.tail_bound),
          std::max(lo.modes, hi.modes)};
}

void require_quantum(const PhysicalParams& p) {
  if (!p.quantum()) throw Error(ErrorCode::HbarZero, "quantum coefficients need hbar > 0");
}

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "time must be finite and >= 0");
}

}  // namespace

const char* to_string(Mode mode) { return mode == Mode::Quantum ? "quantum" : "classical"; }

// ---------------------------------------------------------------------------

double d1_classical(const PhysicalParams& p, double t) {
  const double cv = chi_v(p, t);
  return 2.0 * p.gamma * p.velocity_variance() * cv * cv;
}

double d1_classical_unscaled(const PhysicalParams& p, double t) {
  const double cv = chi_v(p, t);
  return p.velocity_variance() * cv * cv;
}

double sigma1_classical(const PhysicalParams& p, double t) {
  const auto s = susceptibilities(p, t);
  const double g = p.gamma;
  // e^{-gt/2} cosh(wt/2) = (chi_q + chi_v_dot)/2
  const double bracket = -std::expm1(-g * t) - 0.5 * g * g * s.chi_v * s.chi_v -
                         0.5 * g * s.chi_v * (s.chi_q + s.chi_v_dot);
  return p.kT / p.omega0_sq * bracket;
}

double sigma_classical(const PhysicalParams& p, double t) {
  const double cq = chi_q(p, t);
  return p.kT / p.omega0_sq * (1.0 - cq) * (1.0 + cq);
}

double sigma_classical_dot(const PhysicalParams& p, double t) {
  const auto s = susceptibilities(p, t);
  return -2.0 * p.kT / p.omega0_sq * s.chi_q * s.chi_q_dot;
}

double d_classical(const PhysicalParams& p, double t) {
  omega_drift(p, t);  // pole check
  const auto s = susceptibilities(p, t);
  return 2.0 * p.velocity_variance() * s.chi_v / s.chi_q;
}

// ---------------------------------------------------------------------------

namespace {

double mode_term(const ExpSum& f, const ExpSum& g, double weight, const PhysicalParams& p, double t,
                 double nu) {
  if (t == 0.0) return 0.0;
  const double zmax = std::max(std::abs(p.lambda1), std::abs(p.lambda2));
  const cplx lead = 0.5 * (f.at(t) * g.at(t) + f.at(0.0) * g.at(0.0));
  const cplx b = nu >= 2.0 * zmax ? bracket_split(f, g, rational_poles(f, g, t), nu, t)
                                  : bracket_direct(f, g, nu, t, lead);
  return weight * b.real();
}

}  // namespace

double d1_mode_term(const PhysicalParams& p, double t, double nu) {
  const Roots r = roots_of(p);
  return mode_term(chi_v_dot_terms(r), chi_v_terms(r), 8.0 * p.gamma / (p.mass * p.beta), p, t, nu);
}

double sigma1_mode_term(const PhysicalParams& p, double t, double nu) {
  const Roots r = roots_of(p);
  return mode_term(chi_v_terms(r), chi_v_terms(r), 4.0 * p.gamma / (p.mass * p.beta), p, t, nu);
}

QuantumValue d1_mode_sum(const PhysicalParams& p, double t, const QuantumOptions& opts) {
  require_quantum(p);
  require_time(t);
  const double weight = 8.0 * p.gamma / (p.mass * p.beta);
  return near_critical(p, [&](const PhysicalParams& q) {
    const Roots r = roots_of(q);
    return mode_sum(chi_v_dot_terms(r), chi_v_terms(r), weight, q, t, opts);
  });
}

QuantumValue sigma1_mode_sum(const PhysicalParams& p, double t, const QuantumOptions& opts) {
  require_quantum(p);
  require_time(t);
  const double weight = 4.0 * p.gamma / (p.mass * p.beta);
  return near_critical(p, [&](const PhysicalParams& q) {
    const Roots r = roots_of(q);
    return mode_sum(chi_v_terms(r), chi_v_terms(r), weight, q, t, opts);
  });
}

QuantumValue sigma1_correlation(const PhysicalParams& p, double t, const QuantumOptions& opts) {
  require_quantum(p);
  require_time(t);
  return near_critical(p, [&](const PhysicalParams& q) { return correlation_integral(q, t, opts); });
}

QuantumValue d1_quantum(const PhysicalParams& p, double t, const QuantumOptions& opts) {
  require_quantum(p);
  require_time(t);
  if (t == 0.0) return {};
  const QuantumValue modes = d1_mode_sum(p, t, opts);
  const double correlation = 2.0 * chi_q(p, t) * xi_q0(p, t, opts.tol);
  return {d1_classical(p, t) + modes.value + correlation, modes.tail_bound + 2.0 * opts.tol, modes.modes};
}

QuantumValue sigma1_quantum(const PhysicalParams& p, double t, const QuantumOptions& opts) {
  require_quantum(p);
  require_time(t);
  if (t == 0.0) return {};
  const QuantumValue modes = sigma1_mode_sum(p, t, opts);
  const QuantumValue corr = sigma1_correlation(p, t, opts);
  return {sigma1_classical(p, t) + modes.value + corr.value, modes.tail_bound + corr.tail_bound,
          std::max(modes.modes, corr.modes)};
}

double sigma_q(const PhysicalParams& p, double t, Mode mode, const QuantumOptions& opts) {
  const double cv = chi_v(p, t);
  const double base = mode == Mode::Quantum ? sigma1_quantum(p, t, opts).value : sigma1_classical(p, t);
  return base + p.velocity_variance() * cv * cv;
}

double sigma_q_dot(const PhysicalParams& p, double t, Mode mode, const QuantumOptions& opts) {
  const auto s = susceptibilities(p, t);
  const double base = mode == Mode::Quantum ? d1_quantum(p, t, opts).value : d1_classical(p, t);
  return base + 2.0 * p.velocity_variance() * s.chi_v * s.chi_v_dot;
}

double d_fpe(const PhysicalParams& p, double t, Mode mode, const QuantumOptions& opts) {
  const double omega = omega_drift(p, t);
  return sigma_q_dot(p, t, mode, opts) - 2.0 * sigma_q(p, t, mode, opts) * omega;
}

// ---------------------------------------------------------------------------

CoefficientTable build_table(const PhysicalParams& p, const Eigen::VectorXd& t_grid, Mode mode,
                             const QuantumOptions& opts) {
  if (mode == Mode::Quantum) require_quantum(p);
  for (Eigen::Index i = 0; i < t_grid.size(); ++i) {
    require_time(t_grid[i]);
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "time grid must be strictly increasing");
    }
  }
  const Eigen::Index n = t_grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CoefficientTable table;
  table.params = p;
  table.mode = mode;
  table.options = opts;
  table.t = t_grid;
  for (auto* col : {&table.chi_q, &table.chi_v, &table.omega, &table.d1, &table.sigma1, &table.sigma_q,
                    &table.d_fpe, &table.tail_bound}) {
    col->setConstant(n, nan);
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = t_grid[i];
    try {
      const auto s = susceptibilities(p, t);
      table.chi_q[i] = s.chi_q;
      table.chi_v[i] = s.chi_v;
      double d1 = 0.0, sigma1 = 0.0, tail = 0.0;
      if (mode == Mode::Quantum) {
        const auto qd = d1_quantum(p, t, opts);
        const auto qs = sigma1_quantum(p, t, opts);
        d1 = qd.value;
        sigma1 = qs.value;
        tail = std::max(qd.tail_bound, qs.tail_bound);
      } else {
        d1 = d1_classical(p, t);
        sigma1 = sigma1_classical(p, t);
      }
      const double vv = p.velocity_variance();
      table.d1[i] = d1;
      table.sigma1[i] = sigma1;
      table.tail_bound[i] = tail;
      const double sq = sigma1 + vv * s.chi_v * s.chi_v;
      table.sigma_q[i] = sq;
      const double omega = omega_drift(p, t);
      table.omega[i] = omega;
      table.d_fpe[i] = d1 + 2.0 * vv * s.chi_v * s.chi_v_dot - 2.0 * sq * omega;
    } catch (const Error& e) {
      table.errors.push_back({i, t, e.code(), e.what()});
    }
  }

  if (n > 0) {
    for (double z : chi_q_zeros(p, t_grid[0], t_grid[n - 1])) {
      const auto* it = std::lower_bound(t_grid.data(), t_grid.data() + n, z);
      const Eigen::Index hi = it - t_grid.data();
      const double t_lo = hi > 0 ? t_grid[hi - 1] : t_grid[0];
      const double t_hi = hi < n ? t_grid[hi] : t_grid[n - 1];
      table.poles.push_back({z, t_lo, t_hi});
    }
  }
  return table;
}

void require_valid(const CoefficientTable& table) {
  if (table.ok()) return;
  std::ostringstream os;
  os << table.errors.size() << " failed rows:";
  for (const auto& e : table.errors) os << " [" << e.index << " t=" << e.t << " " << to_string(e.code) << "]";
  throw Error(ErrorCode::TableErrors, os.str());
}

void write_csv(const CoefficientTable& table, std::ostream& os) {
  os << "t,omega,d1,sigma1,sigma_q,d_fpe\n";
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    os << table.t[i] << ',' << table.omega[i] << ',' << table.d1[i] << ',' << table.sigma1[i] << ','
       << table.sigma_q[i] << ',' << table.d_fpe[i] << '\n';
  }
}

nlohmann::json to_json(const PhysicalParams& p) {
  nlohmann::json j;
  j["mass"] = p.mass;
  j["gamma"] = p.gamma;
  j["omega0_sq"] = p.omega0_sq;
  j["temperature"] = p.temperature;
  j["hbar"] = p.hbar;
  j["units"] = to_string(p.units);
  j["k_B"] = p.k_B;
  j["beta"] = p.beta;
  j["omega_sq"] = p.omega_sq;
  j["regime"] = to_string(p.regime);
  j["lambda1"] = {p.lambda1.real(), p.lambda1.imag()};
  j["lambda2"] = {p.lambda2.real(), p.lambda2.imag()};
  if (p.quantum()) j["hbar_beta_gamma"] = p.hbar_beta_gamma();
  return j;
}

nlohmann::json sidecar(const CoefficientTable& table) {
  nlohmann::json j;
  j["params"] = to_json(table.params);
  j["mode"] = to_string(table.mode);
  j["rows"] = table.size();
  j["columns"] = {"t", "omega", "d1", "sigma1", "sigma_q", "d_fpe"};
  j["options"] = {{"n_max", table.options.n_max}, {"tol", table.options.tol}};
  double worst_tail = 0.0;
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    if (std::isfinite(table.tail_bound[i])) worst_tail = std::max(worst_tail, table.tail_bound[i]);
  }
  j["max_tail_bound"] = worst_tail;
  auto& poles = j["pole_windows"] = nlohmann::json::array();
  for (const auto& w : table.poles) poles.push_back({{"t_pole", w.t_pole}, {"t_lo", w.t_lo}, {"t_hi", w.t_hi}});
  auto& errors = j["errors"] = nlohmann::json::array();
  for (const auto& e : table.errors) {
    errors.push_back({{"index", e.index}, {"t", e.t}, {"code", to_string(e.code)}, {"message", e.message}});
  }
  return j;
}

// ---------------------------------------------------------------------------

CoefficientSource::CoefficientSource(const PhysicalParams& p, Mode mode, const QuantumOptions& opts)
    : params_(p), mode_(mode), options_(opts) {
  if (mode == Mode::Quantum) require_quantum(p);
}

double CoefficientSource::omega(double t) const { return omega_drift(params_, t); }

double CoefficientSource::diffusion(double t) const { return d_fpe(params_, t, mode_, options_); }

double CoefficientSource::diffusion_d1(double t) const {
  return mode_ == Mode::Quantum ? d1_quantum(params_, t, options_).value : d1_classical(params_, t);
}

double CoefficientSource::variance(double t) const { return sigma_q(params_, t, mode_, options_); }

double CoefficientSource::variance_d1(double t) const {
  return mode_ == Mode::Quantum ? sigma1_quantum(params_, t, options_).value : sigma1_classical(params_, t);
}

double CoefficientSource::first_pole(double t_lo, double t_hi) const {
  for (double z : chi_q_zeros(params_, t_lo, t_hi)) {
    if (z > t_lo) return z;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace qbm
