#include "qbm/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qbm/errors.hpp"
#include "qbm/fpe.hpp"
#include "qbm/propagator.hpp"
#include "qbm/response.hpp"
#include "qbm/sde.hpp"
#include "qbm/special.hpp"

namespace qbm {

namespace {

Eigen::VectorXd logspace(double lo, double hi, int n) {
  return Eigen::VectorXd::LinSpaced(n, std::log(lo), std::log(hi)).array().exp().matrix();
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

PhysicalParams classical_copy(const PhysicalParams& p) {
  RawParams r = raw(p);
  r.hbar = 0.0;
  return derive(r, p.units);
}

// Golub-Welsch nodes and weights on [-1, 1].
struct Legendre {
  Eigen::VectorXd x, w;
};

Legendre gauss_legendre(int n) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  return {es.eigenvalues(), 2.0 * es.eigenvectors().row(0).transpose().array().square().matrix()};
}

template <typename Fn>
double integrate_gl(Fn&& f, double a, double b, const Legendre& rule) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.x.size(); ++i) s += rule.w(i) * f(mid + half * rule.x(i));
  return half * s;
}

double slowest_rate(const PhysicalParams& p) { return std::min(p.lambda1.real(), p.lambda2.real()); }

}  // namespace

ValidationReport check_representation_equality() {
  ValidationReport r;
  r.title = "correlation sum vs hypergeometric form";
  const std::pair<const char*, RawParams> sets[] = {{"overdamped", {1.0, 1.0, 0.16, 1.0, 1.0}},
                                                    {"critical", {1.0, 2.0, 1.0, 1.0, 1.0}},
                                                    {"underdamped", {1.0, 0.5, 1.0, 1.0, 1.0}}};
  for (const auto& [name, raw_params] : sets) {
    const PhysicalParams p = derive(raw_params);
    double worst = 0.0;
    const Eigen::VectorXd grid = logspace(0.1, 50.0, 50);
    for (double vt : grid) {
      const double t = vt / p.nu();
      const double s = xi_q0_sum(p, t, 0, 1e-30).value;
      const double c = xi_q0_closed(p, t);
      worst = std::max(worst, std::abs(c - s) / std::abs(s));
    }
    r.add(std::string("max relative discrepancy, ") + name, worst, 1e-8);
  }
  return r;
}

ValidationReport check_classical_limit(const PhysicalParams& p) {
  ValidationReport r;
  r.title = "classical limit of the quantum coefficients";
  const PhysicalParams q = with_quantumness(p, 1e-4);
  const PhysicalParams c = classical_copy(p);
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(200, 0.1 / p.gamma, 10.0 / p.gamma);
  double d1_err = 0.0, d1_scale = 0.0, s_err = 0.0, s_scale = 0.0;
  for (double t : grid) {
    const double d1c = d1_classical(c, t), sc = sigma_classical(c, t);
    d1_err = std::max(d1_err, std::abs(d1_quantum(q, t).value - d1c));
    s_err = std::max(s_err, std::abs(sigma_q(q, t, Mode::Quantum) - sc));
    d1_scale = std::max(d1_scale, std::abs(d1c));
    s_scale = std::max(s_scale, std::abs(sc));
  }
  r.add("D1 quantum vs classical / max|D1_CL|", d1_err / d1_scale, 1e-3);
  r.add("sigma_q quantum vs classical / max|sigma_CL|", s_err / s_scale, 1e-3);
  return r;
}

ValidationReport check_sigma_consistency(const PhysicalParams& p) {
  ValidationReport r;
  r.title = "sigma consistency";
  const PhysicalParams c = classical_copy(p);
  const double scale = c.kT / c.omega0_sq;
  double worst = 0.0;
  for (double t : Eigen::VectorXd::LinSpaced(100, 0.0, 10.0 / p.gamma)) {
    const double cv = chi_v(c, t);
    worst = std::max(worst, std::abs(sigma1_classical(c, t) + c.velocity_variance() * cv * cv - sigma_classical(c, t)));
  }
  r.add("|sigma1_CL + (kT/M) chi_v^2 - sigma_CL| / (kT/w0^2)", worst / scale, 1e-12);
  return r;
}

ValidationReport check_fpe_identity(const PhysicalParams& p, double q0) {
  ValidationReport r;
  r.title = "FPE residual of the analytic Gaussians";
  const PhysicalParams c = classical_copy(p);
  auto grid_for = [](const GaussianDensity& g, double t) {
    const double sd = std::sqrt(g.variance(t));
    return Eigen::VectorXd::LinSpaced(401, g.mean(t) - 8.0 * sd, g.mean(t) + 8.0 * sd);
  };
  for (auto kind : {DensityKind::ClassicalQ, DensityKind::ConditionalQV}) {
    const GaussianDensity g(c, kind, q0, 0.5);
    double worst = 0.0;
    int skipped = 0;
    for (double t : Eigen::VectorXd::LinSpaced(25, 0.1 / p.gamma, 10.0 / p.gamma)) {
      try {
        const double peak = g.density(g.mean(t), t);
        worst = std::max(worst, fpe_residual(g, grid_for(g, t), t) / peak);
      } catch (const PoleError&) {
        ++skipped;
      }
    }
    r.add(std::string("classical ") + to_string(kind) + " residual / peak", worst, 1e-9,
          skipped ? std::to_string(skipped) + " times at chi_q zeros skipped" : "");
  }

  const PhysicalParams q = with_quantumness(p, 1.0);
  for (auto kind : {DensityKind::ThermalQ, DensityKind::ConditionalQV}) {
    const GaussianDensity g(q, kind, q0, 0.5);
    double worst_ratio = 0.0, worst = 0.0, tol_at_worst = 0.0;
    int skipped = 0;
    for (double t : Eigen::VectorXd::LinSpaced(19, 1.0 / p.gamma, 10.0 / p.gamma)) {
      try {
        const double var = g.variance(t);
        if (!(var > 0.0)) {
          ++skipped;
          continue;
        }
        const double peak = g.density(g.mean(t), t);
        const double res = fpe_residual(g, grid_for(g, t), t) / peak;
        // |d2p/dq2| <= peak / var, so an error e in D moves the residual by at most e peak / (2 var)
        const double tol = d1_quantum(q, t).tail_bound / (2.0 * var);
        if (res / tol >= worst_ratio) {
          worst_ratio = res / tol;
          worst = res;
          tol_at_worst = tol;
        }
      } catch (const PoleError&) {
        ++skipped;
      }
    }
    r.add(std::string("quantum ") + to_string(kind) + " residual / peak", worst, tol_at_worst,
          skipped ? std::to_string(skipped) + " times skipped" : "");
  }
  return r;
}

ValidationReport check_fpe_convergence(const PhysicalParams& p, double q0) {
  ValidationReport r;
  r.title = "FPE solver convergence";
  const PhysicalParams c = classical_copy(p);
  const double tf = 2.0 / p.gamma;
  SolverConfig cfg;
  cfg.n_q = 2001;
  cfg.dt = 1e-4 / p.gamma;
  cfg.q0 = q0;
  cfg = resolve_config(c, FpeForm::PositionOnly, Mode::Classical, tf, cfg);
  SolverConfig fine = cfg;
  fine.n_q = 2 * cfg.n_q - 1;
  const Eigen::VectorXd times = Eigen::VectorXd::Constant(1, tf);
  const double e1 = solve(c, FpeForm::PositionOnly, Mode::Classical, times, cfg, true).linf_error.back();
  const double e2 = solve(c, FpeForm::PositionOnly, Mode::Classical, times, fine, true).linf_error.back();
  r.add("L_inf error / peak at n_q = 2001", e1, 1e-3);
  // ratio in [3.2, 4.8]
  r.add("|refinement error ratio - 4|", std::abs(e1 / e2 - 4.0), 0.8, "ratio " + fmt(e1 / e2));
  return r;
}

ValidationReport check_sde_equivalence(const SuiteOptions& opts) {
  ValidationReport r;
  r.title = "reduced SDE vs closed forms and Langevin marginals";
  const PhysicalParams c = classical_copy(opts.params);
  const Eigen::VectorXd times = Eigen::Vector4d(0.5, 1.0, 2.0, 5.0) / c.gamma;
  SdeConfig cfg;
  cfg.n_paths = opts.paths;
  cfg.dt = 1e-3 / c.gamma;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  const Ensemble red = simulate_reduced(c, opts.q0, times, cfg);
  const LangevinEnsemble lan = simulate_langevin(c, opts.q0, InitialVelocity::maxwell(), times, cfg);
  const double crit = ks_critical(cfg.n_paths, cfg.n_paths, 0.05);
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const double t = times(k);
    const std::string at = " t=" + fmt(t);
    const auto& s = red.stats;
    r.add("|mean - chi_q q0| / SE" + at, std::abs(s.mean(k) - chi_q(c, t) * opts.q0) / s.se_mean(k), 3.0);
    r.add("|var - sigma_CL| / SE" + at, std::abs(s.variance(k) - sigma_classical(c, t)) / s.se_variance(k), 3.0);
    r.add("two-sample KS reduced vs Langevin" + at, ks_statistic(red.samples.col(k), lan.position.samples.col(k)), crit);
  }
  return r;
}

ValidationReport check_stationarity(const PhysicalParams& p) {
  ValidationReport r;
  r.title = "stationarity identity";
  const PhysicalParams c = classical_copy(p);
  double worst = 0.0;
  int skipped = 0;
  const double scale = c.kT / c.mass;
  for (double t : Eigen::VectorXd::LinSpaced(200, 0.05 / p.gamma, 50.0 / p.gamma)) {
    try {
      const double res =
          d_classical(c, t) - 2.0 * sigma_classical(c, t) * relaxation_rate(c, t) - sigma_classical_dot(c, t);
      worst = std::max(worst, std::abs(res) / scale);
    } catch (const PoleError&) {
      ++skipped;
    }
  }
  r.add("max |D_CL - 2 sigma_CL Omega - sigma_CL_dot| / (kT/M)", worst, 1e-8,
        skipped ? std::to_string(skipped) + " times at chi_q zeros skipped" : "");
  if (c.regime == Regime::Overdamped) {
    const double t = 50.0 / p.gamma;
    const double limit = 4.0 * c.kT / (c.mass * (c.gamma + std::sqrt(c.omega_sq)));
    r.add("|D_CL(50/g) - 4kT/(M(g+w))| / limit", std::abs(d_classical(c, t) - limit) / limit, 1e-8);
    r.add("|2 sigma_CL Omega (50/g) - 4kT/(M(g+w))| / limit",
          std::abs(2.0 * sigma_classical(c, t) * relaxation_rate(c, t) - limit) / limit, 1e-8);
  }
  return r;
}

ValidationReport check_equipartition(const SuiteOptions& opts) {
  ValidationReport r;
  r.title = "equipartition endpoint";
  const PhysicalParams c = classical_copy(opts.params);
  const double target = c.kT / c.omega0_sq;
  const double t_long = std::max(40.0 / c.gamma, 8.0 / slowest_rate(c));
  const Eigen::VectorXd times = Eigen::VectorXd::Constant(1, t_long);

  for (auto form : {FpeForm::PositionOnly, FpeForm::DriftVelocity}) {
    const std::string name = std::string("FPE ") + to_string(form) + " |var - kT/w0^2| / (kT/w0^2)";
    try {
      SolverConfig cfg;
      cfg.n_q = 2001;
      cfg.dt = 1e-3 / c.gamma;
      cfg.q0 = opts.q0;
      const FpeRun run = solve(c, form, Mode::Classical, times, cfg);
      const DensityField& f = run.snapshots.back();
      const double s2 = run.config.width * run.config.width;
      // remove the analytically known contribution of the finite initial width
      const double offset = form == FpeForm::PositionOnly ? s2 * std::pow(chi_q(c, t_long), 2) : s2;
      r.add(name, std::abs(f.variance() - offset - target) / target, 1e-3);
    } catch (const Error& e) {
      r.add(name, std::numeric_limits<double>::quiet_NaN(), 1e-3, e.what());
    }
  }

  SdeConfig cfg;
  cfg.n_paths = opts.paths;
  cfg.dt = 1e-2 / c.gamma;
  cfg.seed = opts.seed + 1;
  cfg.threads = opts.threads;
  try {
    const Ensemble red = simulate_reduced(c, opts.q0, times, cfg);
    r.add("reduced SDE |var - kT/w0^2| / SE", std::abs(red.stats.variance(0) - target) / red.stats.se_variance(0), 3.0);
  } catch (const Error& e) {
    r.add("reduced SDE |var - kT/w0^2| / SE", std::numeric_limits<double>::quiet_NaN(), 3.0, e.what());
  }
  const LangevinEnsemble lan = simulate_langevin(c, opts.q0, InitialVelocity::maxwell(), times, cfg);
  r.add("Langevin |var - kT/w0^2| / SE",
        std::abs(lan.position.stats.variance(0) - target) / lan.position.stats.se_variance(0), 3.0);
  return r;
}

ValidationReport coefficient_checks(const PhysicalParams& p, Mode mode, const Eigen::VectorXd& t_grid) {
  ValidationReport r;
  r.title = "coefficient consistency";
  const PhysicalParams c = classical_copy(p);
  double worst = 0.0;
  for (double t : t_grid) {
    const double cv = chi_v(c, t);
    worst = std::max(worst, std::abs(sigma1_classical(c, t) + c.velocity_variance() * cv * cv - sigma_classical(c, t)));
  }
  r.add("|sigma1_CL + (kT/M) chi_v^2 - sigma_CL| / (kT/w0^2)", worst / (c.kT / c.omega0_sq), 1e-12);

  if (mode == Mode::Quantum) {
    // sigma1 increments against Gauss-Legendre integrals of D1 between grid points
    const Legendre rule = gauss_legendre(24);
    double worst_rel = 0.0;
    int used = 0;
    for (Eigen::Index k = 1; k < t_grid.size(); ++k) {
      const double a = t_grid(k - 1), b = t_grid(k);
      if (a < 0.05 / p.gamma) continue;  // log singularity of the correlation term at 0
      const double inc = sigma1_quantum(p, b).value - sigma1_quantum(p, a).value;
      const double quad = integrate_gl([&](double t) { return d1_quantum(p, t).value; }, a, b, rule);
      const double scale = std::max(std::abs(sigma1_quantum(p, b).value), 1e-300);
      worst_rel = std::max(worst_rel, std::abs(inc - quad) / scale);
      ++used;
    }
    r.add("|sigma1(t_k) - sigma1(t_k-1) - int D1| / |sigma1(t_k)|", worst_rel, 1e-8,
          std::to_string(used) + " intervals");
  }
  return r;
}

std::vector<std::string> suite_names() { return {"classical", "quantum", "all"}; }

ValidationReport run_suite(const std::string& suite, const SuiteOptions& opts) {
  const bool classical = suite == "classical" || suite == "all";
  const bool quantum = suite == "quantum" || suite == "all";
  if (!classical && !quantum) throw Error(ErrorCode::InvalidArgument, "unknown suite '" + suite + "'");
  ValidationReport r;
  r.title = "validation suite " + suite;
  if (quantum) r.merge(check_representation_equality(), "criterion 1: ");
  if (quantum) r.merge(check_classical_limit(opts.params), "criterion 2: ");
  if (classical) r.merge(check_sigma_consistency(opts.params), "criterion 3: ");
  r.merge(check_fpe_identity(opts.params, opts.q0), "criterion 4: ");
  if (classical) {
    r.merge(check_fpe_convergence(opts.params, opts.q0), "criterion 5: ");
    r.merge(check_sde_equivalence(opts), "criterion 6: ");
    r.merge(check_stationarity(opts.params), "criterion 7: ");
    r.merge(check_equipartition(opts), "criterion 8: ");
  }
  return r;
}

}  // namespace qbm
