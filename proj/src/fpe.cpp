#include "qbm/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "qbm/errors.hpp"
#include "qbm/response.hpp"

namespace qbm {

namespace {

// Thomas algorithm; sub(0) and super(n-1) are unused.
void solve_tridiagonal(const Eigen::VectorXd& sub, const Eigen::VectorXd& diag, const Eigen::VectorXd& super,
                       Eigen::VectorXd& rhs) {
  const Eigen::Index n = diag.size();
  Eigen::VectorXd c(n);
  double denom = diag(0);
  c(0) = super(0) / denom;
  rhs(0) /= denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag(i) - sub(i) * c(i - 1);
    c(i) = i + 1 < n ? super(i) / denom : 0.0;
    rhs(i) = (rhs(i) - sub(i) * rhs(i - 1)) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) rhs(i) -= c(i) * rhs(i + 1);
}

PhysicalParams for_mode(const PhysicalParams& p, Mode mode) {
  if (mode == Mode::Quantum) return p;
  RawParams r = raw(p);
  r.hbar = 0.0;
  return derive(r, p.units);
}

Eigen::VectorXd sample_gaussian(const Eigen::VectorXd& q, double centre, double var) {
  return (1.0 / std::sqrt(2.0 * M_PI * var)) * (-0.5 * (q.array() - centre).square() / var).exp().matrix();
}

}  // namespace

const char* to_string(FpeForm form) {
  return form == FpeForm::PositionOnly ? "adelman" : "drift-velocity";
}

const char* to_string(Scheme scheme) {
  return scheme == Scheme::CrankNicolson ? "crank_nicolson" : "upwind_split";
}

const char* to_string(Boundary boundary) {
  return boundary == Boundary::ZeroFlux ? "zero-flux" : "absorbing";
}

FpeForm parse_form(const std::string& name) {
  if (name == "adelman" || name == "position") return FpeForm::PositionOnly;
  if (name == "drift-velocity" || name == "drift") return FpeForm::DriftVelocity;
  throw Error(ErrorCode::InvalidArgument, "unknown form '" + name + "'");
}

Scheme parse_scheme(const std::string& name) {
  if (name == "crank_nicolson" || name == "cn") return Scheme::CrankNicolson;
  if (name == "upwind_split" || name == "upwind") return Scheme::UpwindSplit;
  throw Error(ErrorCode::InvalidArgument, "unknown scheme '" + name + "'");
}

Boundary parse_boundary(const std::string& name) {
  if (name == "zero-flux") return Boundary::ZeroFlux;
  if (name == "absorbing") return Boundary::Absorbing;
  throw Error(ErrorCode::InvalidArgument, "unknown boundary '" + name + "'");
}

double DensityField::mean() const { return dq() * q.dot(values) / mass(); }

double DensityField::variance() const {
  const double m = mean();
  return dq() * ((q.array() - m).square() * values.array()).sum() / mass();
}

nlohmann::json to_json(const SolverConfig& cfg) {
  return {{"dt", cfg.dt},          {"scheme", to_string(cfg.scheme)}, {"boundary", to_string(cfg.boundary)},
          {"n_q", cfg.n_q},        {"q0", cfg.q0},                    {"v0", cfg.v0},
          {"width", cfg.width},    {"half_width", cfg.half_width},    {"cfl_limit", cfg.cfl_limit}, {"t_start", cfg.t_start}};
}

// ---------------------------------------------------------------------------

CoefficientFn fpe_coefficients(const CoefficientSource& source, FpeForm form, double q0, double v0) {
  if (form == FpeForm::PositionOnly) {
    return [&source](double t) { return FpeCoefficients{source.omega(t), 0.0, source.diffusion(t)}; };
  }
  return [&source, q0, v0](double t) {
    return FpeCoefficients{0.0, drift_velocity(source.params(), t, q0, v0), source.diffusion_d1(t)};
  };
}

FpeStepper::FpeStepper(CoefficientFn coefficients, const SolverConfig& cfg, PoleFn poles)
    : coefficients_(std::move(coefficients)), poles_(std::move(poles)), cfg_(cfg) {}

void FpeStepper::step(DensityField& field, double dt, SolveStats* stats) const {
  const double t_mid = field.t + 0.5 * dt;
  if (poles_) {
    const double pole = poles_(field.t, field.t + dt);
    if (std::isfinite(pole)) {
      throw Error(ErrorCode::PoleWindow, "chi_q vanishes at t = " + std::to_string(pole) + " inside the step from " +
                                             std::to_string(field.t));
    }
  }
  const FpeCoefficients co = coefficients_(t_mid);
  if (!std::isfinite(co.omega) || !std::isfinite(co.vbar) || !std::isfinite(co.diffusion)) {
    throw Error(ErrorCode::NonFiniteCoefficient, "coefficients at t = " + std::to_string(t_mid));
  }
  if (dt * std::abs(co.omega) > cfg_.cfl_limit) {
    throw Error(ErrorCode::CFLViolation, "dt |Omega| = " + std::to_string(dt * std::abs(co.omega)) + " exceeds " +
                                             std::to_string(cfg_.cfl_limit));
  }
  const double diff = co.diffusion;
  if (diff < 0.0) {
    throw Error(ErrorCode::NegativeDiffusion, "D = " + std::to_string(diff) + " at t = " + std::to_string(t_mid));
  }

  const Eigen::Index n = field.values.size();
  const double h = field.dq();
  // faces: n + 1 including the two boundary faces
  const Eigen::VectorXd faces = Eigen::VectorXd::LinSpaced(n + 1, field.q(0) - 0.5 * h, field.q(n - 1) + 0.5 * h);
  const Eigen::VectorXd a = (co.omega * faces.array() + co.vbar).matrix();

  const double max_a = a.cwiseAbs().maxCoeff();
  if (cfg_.scheme == Scheme::UpwindSplit && max_a * dt / h > 1.0) {
    throw Error(ErrorCode::CFLViolation, "upwind Courant number " + std::to_string(max_a * dt / h) + " exceeds 1");
  }
  if (stats && diff > 0.0) stats->max_peclet = std::max(stats->max_peclet, max_a * h / diff);

  const bool absorbing = cfg_.boundary == Boundary::Absorbing;
  const bool central = cfg_.scheme == Scheme::CrankNicolson;

  // L p = -(F_{i+1/2} - F_{i-1/2}) / h with F = alpha p_left + beta p_right
  Eigen::VectorXd lsub = Eigen::VectorXd::Zero(n), ldiag = Eigen::VectorXd::Zero(n), lsup = Eigen::VectorXd::Zero(n);
  const double dflux = 0.5 * diff / h;
  for (Eigen::Index f = 0; f <= n; ++f) {
    const double adv = central ? a(f) : 0.0;
    const double alpha = 0.5 * adv + dflux;
    const double beta = 0.5 * adv - dflux;
    const Eigen::Index left = f - 1, right = f;
    if (left < 0 || right >= n) {
      if (!absorbing) continue;
      // ghost cell holds zero
      if (left < 0) ldiag(right) += beta / h;
      else ldiag(left) -= alpha / h;
      continue;
    }
    ldiag(left) -= alpha / h;
    lsup(left) -= beta / h;
    lsub(right) += alpha / h;
    ldiag(right) += beta / h;
  }

  Eigen::VectorXd p = field.values;
  if (!central) {
    Eigen::VectorXd flux = Eigen::VectorXd::Zero(n + 1);
    for (Eigen::Index f = 0; f <= n; ++f) {
      const double up = std::max(a(f), 0.0), down = std::min(a(f), 0.0);
      const double pl = f >= 1 ? p(f - 1) : 0.0;
      const double pr = f < n ? p(f) : 0.0;
      if ((f == 0 || f == n) && !absorbing) continue;
      flux(f) = up * pl + down * pr;
    }
    p -= (dt / h) * (flux.tail(n) - flux.head(n));
  }

  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = p(i) + 0.5 * dt * ldiag(i) * p(i);
    if (i > 0) r += 0.5 * dt * lsub(i) * p(i - 1);
    if (i + 1 < n) r += 0.5 * dt * lsup(i) * p(i + 1);
    rhs(i) = r;
  }
  const Eigen::VectorXd sub = -0.5 * dt * lsub;
  const Eigen::VectorXd dia = Eigen::VectorXd::Ones(n) - 0.5 * dt * ldiag;
  const Eigen::VectorXd sup = -0.5 * dt * lsup;
  solve_tridiagonal(sub, dia, sup, rhs);

  if (!rhs.allFinite()) throw Error(ErrorCode::NonFiniteState, "density at t = " + std::to_string(field.t + dt));
  field.values = rhs;
  field.t += dt;
  if (stats) {
    ++stats->steps;
    const double lo = field.values.minCoeff();
    stats->min_value = std::min(stats->min_value, lo);
    stats->negative_cells += (field.values.array() < -1e-12).count() > 0 ? 1 : 0;
  }
}

// ---------------------------------------------------------------------------

GaussianDensity analytic_solution(const PhysicalParams& p, FpeForm form, Mode mode, const SolverConfig& cfg,
                                  const QuantumOptions& opts) {
  const PhysicalParams eff = for_mode(p, mode);
  const DensityKind kind = form == FpeForm::DriftVelocity ? DensityKind::ConditionalQV
                           : mode == Mode::Classical      ? DensityKind::ClassicalQ
                                                          : DensityKind::ThermalQ;
  return GaussianDensity(eff, kind, cfg.q0, cfg.v0, opts).with_initial_variance(cfg.width * cfg.width);
}

SolverConfig resolve_config(const PhysicalParams& p, FpeForm form, Mode mode, double t_final, const SolverConfig& cfg,
                            const QuantumOptions& opts) {
  if (cfg.n_q < 5) throw Error(ErrorCode::InvalidArgument, "n_q must be >= 5");
  if (!(cfg.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  if (!(cfg.t_start >= 0.0) || cfg.t_start > t_final) {
    throw Error(ErrorCode::InvalidArgument, "t_start must lie in [0, t_final]");
  }
  SolverConfig out = cfg;
  if (out.half_width <= 0.0) {
    SolverConfig probe = cfg;
    probe.width = 0.0;
    const GaussianDensity g = analytic_solution(p, form, mode, probe, opts);
    double var_max = 0.0, chi_v_max = 0.0;
    const int samples = 200;
    for (int k = 1; k <= samples; ++k) {
      const double t = cfg.t_start + (t_final - cfg.t_start) * k / samples;
      var_max = std::max(var_max, g.variance(t));
      chi_v_max = std::max(chi_v_max, std::abs(chi_v(p, t)));
    }
    out.half_width = 8.0 * std::sqrt(var_max) + std::abs(cfg.q0) + std::abs(cfg.v0) * chi_v_max;
    if (out.width > 0.0) out.half_width += 8.0 * out.width;
  }
  if (out.width <= 0.0) {
    const double h = 2.0 * out.half_width / (cfg.n_q - 1);
    out.width = 5.0 * h;
    if (cfg.half_width <= 0.0) out.half_width += 8.0 * out.width;
  }
  return out;
}

FpeRun solve(const PhysicalParams& p, FpeForm form, Mode mode, const Eigen::VectorXd& snapshot_times,
             const SolverConfig& cfg, bool compare_analytic, const QuantumOptions& opts) {
  if (snapshot_times.size() == 0) throw Error(ErrorCode::InvalidArgument, "no snapshot times");
  for (Eigen::Index k = 0; k < snapshot_times.size(); ++k) {
    if (snapshot_times(k) < cfg.t_start || (k > 0 && snapshot_times(k) <= snapshot_times(k - 1))) {
      throw Error(ErrorCode::InvalidArgument, "snapshot times must be >= t_start and increasing");
    }
  }
  if (mode == Mode::Quantum && !p.quantum()) throw Error(ErrorCode::HbarZero, "quantum FPE needs hbar > 0");

  FpeRun run{form, mode, resolve_config(p, form, mode, snapshot_times.maxCoeff(), cfg, opts), {}, {}, {}};
  const SolverConfig& c = run.config;
  const PhysicalParams eff = for_mode(p, mode);
  const CoefficientSource source(eff, mode, opts);
  PoleFn poles;
  if (form == FpeForm::PositionOnly) {
    poles = [&source](double lo, double hi) { return source.first_pole(lo, hi); };
    const double pole = source.first_pole(c.t_start, snapshot_times.maxCoeff());
    if (std::isfinite(pole)) {
      throw Error(ErrorCode::PoleWindow, "chi_q vanishes at t = " + std::to_string(pole) + "; Omega-form runs must end before it");
    }
  }
  const FpeStepper stepper(fpe_coefficients(source, form, c.q0, c.v0), c, poles);

  const GaussianDensity exact = analytic_solution(p, form, mode, c, opts);
  DensityField start = gaussian_field(c.n_q, c.half_width, c.q0, c.width);
  if (c.t_start > 0.0) {
    start.values = exact.density(start.q, c.t_start);
    start.t = c.t_start;
  }
  run.snapshots = advance(stepper, start, snapshot_times, c.dt, &run.stats);
  const double mass0 = start.mass();
  for (const DensityField& f : run.snapshots) {
    run.stats.max_mass_drift = std::max(run.stats.max_mass_drift, std::abs(f.mass() - mass0));
    if (compare_analytic) run.linf_error.push_back(linf_error(f, exact));
  }
  return run;
}

DensityField gaussian_field(int n_q, double half_width, double centre, double width) {
  DensityField field;
  field.q = Eigen::VectorXd::LinSpaced(n_q, -half_width, half_width);
  field.values = sample_gaussian(field.q, centre, width * width);
  field.t = 0.0;
  return field;
}

std::vector<DensityField> advance(const FpeStepper& stepper, DensityField field, const Eigen::VectorXd& times,
                                  double dt, SolveStats* stats) {
  std::vector<DensityField> out;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const double target = times(k);
    const double span = target - field.t;
    if (span < 0.0) throw Error(ErrorCode::InvalidArgument, "times must be increasing");
    if (span > 0.0) {
      const long n = std::max(1L, static_cast<long>(std::ceil(span / dt * (1.0 - 1e-12))));
      const double h = span / n;
      const double start = field.t;
      for (long s = 0; s < n; ++s) {
        stepper.step(field, h, stats);
        field.t = start + (s + 1) * h;
      }
      field.t = target;
    }
    out.push_back(field);
  }
  return out;
}

double linf_error(const DensityField& field, const GaussianDensity& exact) {
  const Eigen::VectorXd ref = exact.density(field.q, field.t);
  return (field.values - ref).cwiseAbs().maxCoeff() / ref.maxCoeff();
}

DensityField maxwell_averaged_solve(const PhysicalParams& p, Mode mode, double t_final, const SolverConfig& cfg,
                                    int n_nodes, const QuantumOptions& opts) {
  if (cfg.half_width <= 0.0 || cfg.width <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "Maxwell-averaged runs need an explicit grid and width");
  }
  const GaussHermiteRule rule = gauss_hermite(n_nodes);
  const double scale = std::sqrt(2.0 * p.velocity_variance());
  Eigen::VectorXd times(1);
  times << t_final;
  DensityField avg;
  for (int i = 0; i < n_nodes; ++i) {
    SolverConfig c = cfg;
    c.v0 = scale * rule.nodes(i);
    const FpeRun run = solve(p, FpeForm::DriftVelocity, mode, times, c, false, opts);
    const DensityField& f = run.snapshots.back();
    if (i == 0) {
      avg = f;
      avg.values.setZero();
    }
    avg.values += (rule.weights(i) / std::sqrt(M_PI)) * f.values;
  }
  return avg;
}

void write_csv(const DensityField& field, std::ostream& os) {
  os.precision(17);
  os << "q,p\n";
  for (Eigen::Index i = 0; i < field.q.size(); ++i) os << field.q(i) << ',' << field.values(i) << '\n';
}

nlohmann::json manifest(const FpeRun& run, const PhysicalParams& p) {
  nlohmann::json snaps = nlohmann::json::array();
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    const DensityField& f = run.snapshots[k];
    nlohmann::json s = {{"t", f.t}, {"mass", f.mass()}, {"mean", f.mean()}, {"variance", f.variance()}};
    if (k < run.linf_error.size()) s["linf_error"] = run.linf_error[k];
    snaps.push_back(s);
  }
  return {{"params", to_json(p)},
          {"form", to_string(run.form)},
          {"mode", to_string(run.mode)},
          {"config", to_json(run.config)},
          {"stats",
           {{"steps", run.stats.steps},
            {"max_peclet", run.stats.max_peclet},
            {"min_value", run.stats.min_value},
            {"steps_with_negative_cells", run.stats.negative_cells},
            {"max_mass_drift", run.stats.max_mass_drift}}},
          {"snapshots", snaps}};
}

}  // namespace qbm
