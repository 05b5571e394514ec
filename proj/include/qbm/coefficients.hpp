#ifndef QBM_COEFFICIENTS_HPP
#define QBM_COEFFICIENTS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qbm/errors.hpp"
#include "qbm/model.hpp"

namespace qbm {

enum class Mode { Quantum, Classical };

const char* to_string(Mode mode);

// ---------------------------------------------------------------------------
// Classical closed forms (hbar = 0)

/// (2 gamma kT / M) chi_v^2, the white-noise diffusion function. Equals d/dt sigma1_classical.
double d1_classical(const PhysicalParams& p, double t);

/// (2 kT / (M w^2)) e^{-gt} (cosh(wt) - 1) as commonly quoted; differs from
/// d1_classical by a factor 2 gamma and is kept only for comparison.
double d1_classical_unscaled(const PhysicalParams& p, double t);

/// (kT/w0^2) [1 - e^{-gt} ((2g^2/w^2) sinh^2(wt/2) + (g/w) sinh(wt) + 1)]
double sigma1_classical(const PhysicalParams& p, double t);

/// (kT/w0^2) [1 - chi_q^2], the thermal-velocity-averaged variance.
double sigma_classical(const PhysicalParams& p, double t);
double sigma_classical_dot(const PhysicalParams& p, double t);

/// (4 kT/(M g)) sinh(wt/2) / (sinh(wt/2) + (w/g) cosh(wt/2)) = (2kT/M) chi_v/chi_q.
/// Throws PoleError at zeros of chi_q.
double d_classical(const PhysicalParams& p, double t);

// ---------------------------------------------------------------------------
// Quantum coefficients

struct QuantumOptions {
  int n_max = 0;       // 0: smallest Matsubara order meeting tol
  double tol = 1e-14;  // absolute bound on the truncated exponential remainder
};

struct QuantumValue {
  double value = 0.0;
  double tail_bound = 0.0;
  int modes = 0;
};

/// Contribution of one frequency nu to d1_mode_sum / sigma1_mode_sum, including
/// the subtracted 1/nu piece.
double d1_mode_term(const PhysicalParams& p, double t, double nu);
double sigma1_mode_term(const PhysicalParams& p, double t, double nu);

/// Matsubara-mode part of D1 (excluding the white-noise and initial-correlation terms).
QuantumValue d1_mode_sum(const PhysicalParams& p, double t, const QuantumOptions& opts = {});

/// Matsubara-mode part of sigma1 (noise part only).
QuantumValue sigma1_mode_sum(const PhysicalParams& p, double t, const QuantumOptions& opts = {});

/// 2 int_0^t chi_q(s) <xi(s) q(0)> ds.
QuantumValue sigma1_correlation(const PhysicalParams& p, double t, const QuantumOptions& opts = {});

/// D1(t) = 2 [ int_0^t <phi_v(t) phi_v(t')> dt' + chi_q(t) <xi(t) q(0)> ].
/// Requires hbar > 0. D1(0) = 0; the initial-correlation term diverges
/// logarithmically as t -> 0+.
QuantumValue d1_quantum(const PhysicalParams& p, double t, const QuantumOptions& opts = {});

/// sigma1(t) = int_0^t D1.
QuantumValue sigma1_quantum(const PhysicalParams& p, double t, const QuantumOptions& opts = {});

double sigma_q(const PhysicalParams& p, double t, Mode mode, const QuantumOptions& opts = {});
double sigma_q_dot(const PhysicalParams& p, double t, Mode mode, const QuantumOptions& opts = {});

/// Diffusion function of the position-only FPE, sigma_q_dot - 2 sigma_q Omega.
/// Throws PoleError at zeros of chi_q.
double d_fpe(const PhysicalParams& p, double t, Mode mode, const QuantumOptions& opts = {});

// ---------------------------------------------------------------------------
// Tabulated coefficients

struct PoleWindow {
  double t_pole;
  double t_lo;  // last grid time before the pole
  double t_hi;  // first grid time after it
};

struct TableError {
  Eigen::Index index;
  double t;
  ErrorCode code;
  std::string message;
};

struct CoefficientTable {
  PhysicalParams params;
  Mode mode = Mode::Classical;
  QuantumOptions options;

  Eigen::VectorXd t;
  Eigen::VectorXd chi_q;
  Eigen::VectorXd chi_v;
  Eigen::VectorXd omega;
  Eigen::VectorXd d1;
  Eigen::VectorXd sigma1;
  Eigen::VectorXd sigma_q;
  Eigen::VectorXd d_fpe;
  Eigen::VectorXd tail_bound;

  std::vector<PoleWindow> poles;
  std::vector<TableError> errors;

  Eigen::Index size() const { return t.size(); }
  bool ok() const { return errors.empty(); }
};

/// Fills every column on the grid. Failed cells hold NaN and are listed in
/// errors; the grid itself must be increasing (InvalidArgument otherwise).
CoefficientTable build_table(const PhysicalParams& p, const Eigen::VectorXd& t_grid, Mode mode,
                             const QuantumOptions& opts = {});

/// Throws Error(TableErrors) listing every failed row.
void require_valid(const CoefficientTable& table);

void write_csv(const CoefficientTable& table, std::ostream& os);
nlohmann::json sidecar(const CoefficientTable& table);

nlohmann::json to_json(const PhysicalParams& p);

// ---------------------------------------------------------------------------
// Pointwise coefficient source used by the solvers

/// Evaluates Omega and the FPE diffusion functions at arbitrary times, so
/// time steppers can sample midpoints exactly.
class CoefficientSource {
 public:
  CoefficientSource(const PhysicalParams& p, Mode mode, const QuantumOptions& opts = {});

  const PhysicalParams& params() const { return params_; }
  Mode mode() const { return mode_; }

  double omega(double t) const;
  double diffusion(double t) const;     // D for the position-only form
  double diffusion_d1(double t) const;  // D1 for the drift-velocity form
  double variance(double t) const;      // sigma_q
  double variance_d1(double t) const;   // sigma1

  /// First zero of chi_q inside (t_lo, t_hi], or +inf.
  double first_pole(double t_lo, double t_hi) const;

 private:
  PhysicalParams params_;
  Mode mode_;
  QuantumOptions options_;
};

}  // namespace qbm

#endif  // QBM_COEFFICIENTS_HPP
