#ifndef QBM_VALIDATION_HPP
#define QBM_VALIDATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qbm/coefficients.hpp"
#include "qbm/model.hpp"
#include "qbm/report.hpp"

namespace qbm {

struct SuiteOptions {
  PhysicalParams params = derive({1.0, 1.0, 0.16, 1.0, 0.0});
  double q0 = 1.0;
  long paths = 100000;
  std::uint64_t seed = 2024;
  int threads = 1;
};

/// Sum and hypergeometric forms of <xi(t) q(0)> on 50 log-spaced nu t in [0.1, 50],
/// for one overdamped, one critical and one underdamped parameter set.
ValidationReport check_representation_equality();

/// Quantum D1 and sigma_q at hbar beta gamma = 1e-4 against the classical closed forms on [0.1, 10]/gamma.
ValidationReport check_classical_limit(const PhysicalParams& p);

/// sigma1_CL + (kT/M) chi_v^2 against the closed form of sigma_CL on 100 points.
ValidationReport check_sigma_consistency(const PhysicalParams& p);

/// FPE residual of the analytic Gaussians: classical at 1e-9 of the peak,
/// quantum (hbar beta gamma = 1) at the D1 tail bound times max|p''|/2.
ValidationReport check_fpe_identity(const PhysicalParams& p, double q0);

/// Position-only solve at n_q = 2001, dt = 1e-4/gamma to 2/gamma; error ratio under 2x refinement.
ValidationReport check_fpe_convergence(const PhysicalParams& p, double q0);

/// Reduced SDE moments against closed forms and two-sample KS against the Langevin q-marginal.
ValidationReport check_sde_equivalence(const SuiteOptions& opts);

/// D_CL - 2 sigma_CL relaxation_rate - sigma_CL_dot = 0 and the t -> infinity values.
ValidationReport check_stationarity(const PhysicalParams& p);

/// Long-time variance from both FPE forms and both simulators against kT / w0^2.
ValidationReport check_equipartition(const SuiteOptions& opts);

/// Sigma consistency checks for one parameter set, used by `coeffs --validate`.
ValidationReport coefficient_checks(const PhysicalParams& p, Mode mode, const Eigen::VectorXd& t_grid);

/// "classical", "quantum" or "all".
ValidationReport run_suite(const std::string& suite, const SuiteOptions& opts);

std::vector<std::string> suite_names();

}  // namespace qbm

#endif  // QBM_VALIDATION_HPP
