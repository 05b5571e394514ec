#ifndef QBM_FPE_HPP
#define QBM_FPE_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qbm/coefficients.hpp"
#include "qbm/propagator.hpp"

namespace qbm {

enum class FpeForm {
  DriftVelocity,  // dp/dt = -vbar dp/dq + (D1/2) d2p/dq2, fixed v0
  PositionOnly,   // dp/dt = -Omega d(qp)/dq + (D/2) d2p/dq2, thermal v0
};

enum class Scheme {
  CrankNicolson,  // advection and diffusion together, central fluxes
  UpwindSplit,    // explicit upwind advection, then Crank-Nicolson diffusion
};

enum class Boundary { ZeroFlux, Absorbing };

const char* to_string(FpeForm form);
const char* to_string(Scheme scheme);
const char* to_string(Boundary boundary);
FpeForm parse_form(const std::string& name);
Scheme parse_scheme(const std::string& name);
Boundary parse_boundary(const std::string& name);

/// Probability values on a uniform grid at one instant.
struct DensityField {
  Eigen::VectorXd q;
  Eigen::VectorXd values;
  double t = 0.0;

  double dq() const { return q(1) - q(0); }
  double mass() const { return dq() * values.sum(); }
  double mean() const;
  double variance() const;
};

struct SolverConfig {
  double dt = 1e-4;
  Scheme scheme = Scheme::CrankNicolson;
  Boundary boundary = Boundary::ZeroFlux;
  int n_q = 2001;
  double q0 = 1.0;
  double v0 = 0.0;            // drift-velocity form only
  double width = 0.0;         // initial standard deviation; 0 selects 5 dq
  double half_width = 0.0;    // grid is [-half_width, half_width]; 0 derives it
  double cfl_limit = 0.1;     // bound on dt |Omega|
  double t_start = 0.0;       // > 0 starts from the analytic density at t_start
};

nlohmann::json to_json(const SolverConfig& cfg);

struct SolveStats {
  long steps = 0;
  double max_peclet = 0.0;
  double min_value = 0.0;
  long negative_cells = 0;  // cells below -1e-12 after any step (not clipped)
  double max_mass_drift = 0.0;
};

struct FpeRun {
  FpeForm form;
  Mode mode;
  SolverConfig config;  // with width and half_width resolved
  std::vector<DensityField> snapshots;
  SolveStats stats;
  std::vector<double> linf_error;  // relative to the analytic peak, per snapshot
};

/// Coefficients of the linear-drift FPE at time t.
using CoefficientFn = std::function<FpeCoefficients(double)>;
/// First singular time in (t_lo, t_hi], or +inf.
using PoleFn = std::function<double(double, double)>;

/// Omega-form coefficients (position-only) or vbar/D1 coefficients (drift-velocity).
CoefficientFn fpe_coefficients(const CoefficientSource& source, FpeForm form, double q0, double v0);

/// Conservative flux-form stepper for dp/dt = -d/dq[(omega q + vbar) p] + (D/2) d2p/dq2.
class FpeStepper {
 public:
  FpeStepper(CoefficientFn coefficients, const SolverConfig& cfg, PoleFn poles = {});

  /// Advances by dt with coefficients sampled at t + dt/2. Throws PoleWindow,
  /// NegativeDiffusion or CFLViolation without modifying the field.
  void step(DensityField& field, double dt, SolveStats* stats = nullptr) const;

 private:
  CoefficientFn coefficients_;
  PoleFn poles_;
  SolverConfig cfg_;
};

/// Uniform grid on [-half_width, half_width] holding a Gaussian of the given
/// centre and standard deviation.
DensityField gaussian_field(int n_q, double half_width, double centre, double width);

/// Steps field to each time in order, shortening the step so every time is
/// hit exactly. Returns the field at each time.
std::vector<DensityField> advance(const FpeStepper& stepper, DensityField field, const Eigen::VectorXd& times,
                                  double dt, SolveStats* stats = nullptr);

/// The analytic Gaussian the chosen form evolves, including the initial width.
GaussianDensity analytic_solution(const PhysicalParams& p, FpeForm form, Mode mode, const SolverConfig& cfg,
                                  const QuantumOptions& opts = {});

/// Fills width and half_width when left at 0. The half width is
/// 8 max_t sd(t) + |q0| + |v0| max_t |chi_v| over (t_start, t_final].
SolverConfig resolve_config(const PhysicalParams& p, FpeForm form, Mode mode, double t_final,
                            const SolverConfig& cfg, const QuantumOptions& opts = {});

/// Integrates from t_start and returns one snapshot per requested time (the
/// step is shortened so every snapshot is hit exactly). Quantum diffusion
/// functions are negative at small t, so quantum runs need t_start > 0.
FpeRun solve(const PhysicalParams& p, FpeForm form, Mode mode, const Eigen::VectorXd& snapshot_times,
             const SolverConfig& cfg, bool compare_analytic = false, const QuantumOptions& opts = {});

/// max |p_grid - p_exact| / max p_exact.
double linf_error(const DensityField& field, const GaussianDensity& exact);

/// Average of drift-velocity runs over Gauss-Hermite v0 nodes of the Maxwell
/// distribution; the result estimates the thermal density at t_final.
DensityField maxwell_averaged_solve(const PhysicalParams& p, Mode mode, double t_final, const SolverConfig& cfg,
                                    int n_nodes, const QuantumOptions& opts = {});

void write_csv(const DensityField& field, std::ostream& os);
nlohmann::json manifest(const FpeRun& run, const PhysicalParams& p);

}  // namespace qbm

#endif  // QBM_FPE_HPP
