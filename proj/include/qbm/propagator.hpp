#ifndef QBM_PROPAGATOR_HPP
#define QBM_PROPAGATOR_HPP

#include <iosfwd>

#include <Eigen/Core>

#include "qbm/coefficients.hpp"
#include "qbm/model.hpp"

namespace qbm {

enum class DensityKind {
  ConditionalQV,  // p(q,t | q0, v0), variance sigma1
  ThermalQ,       // v0 averaged over the Maxwell distribution, variance sigma_q
  ClassicalQ,     // ThermalQ with the classical closed forms
};

const char* to_string(DensityKind kind);

/// Gaussian solution of the FPE started from a Gaussian of variance
/// initial_variance (0 for the delta initial condition).
///
/// The initial width is carried along analytically: it translates unchanged
/// under the drift-velocity equation (ConditionalQV) and is scaled by chi_q^2
/// under the Omega-form equation (ThermalQ, ClassicalQ).
class GaussianDensity {
 public:
  GaussianDensity(const PhysicalParams& p, DensityKind kind, double q0, double v0 = 0.0,
                  const QuantumOptions& opts = {});

  GaussianDensity with_initial_variance(double s2) const;

  DensityKind kind() const { return kind_; }
  Mode mode() const { return mode_; }
  const PhysicalParams& params() const { return params_; }
  double q0() const { return q0_; }
  double v0() const { return v0_; }
  const QuantumOptions& options() const { return options_; }
  double initial_variance() const { return initial_variance_; }

  double mean(double t) const;
  double mean_dot(double t) const;
  double variance(double t) const;
  double variance_dot(double t) const;

  /// (2 pi var)^{-1/2} exp(-(q - mean)^2 / (2 var)). Throws DegenerateVariance
  /// when the variance is not positive (t = 0 with a delta initial condition).
  double density(double q, double t) const;
  Eigen::VectorXd density(const Eigen::VectorXd& q, double t) const;

  double cdf(double q, double t) const;

 private:
  PhysicalParams params_;
  DensityKind kind_;
  Mode mode_;
  QuantumOptions options_;
  double q0_;
  double v0_;
  double initial_variance_ = 0.0;
};

/// Linear drift field omega q + vbar with diffusion function D.
struct FpeCoefficients {
  double omega = 0.0;
  double vbar = 0.0;
  double diffusion = 0.0;
};

/// max over q of |dp/dt + d/dq[(omega q + vbar) p] - D/2 d2p/dq2| for the
/// Gaussian with the given mean, variance and their time derivatives.
double gaussian_fpe_residual(double mean, double mean_dot, double variance, double variance_dot,
                             const FpeCoefficients& c, const Eigen::VectorXd& q);

/// max over q of |dp/dt + div(flux)| for the analytic Gaussian, with every
/// time derivative taken analytically. The flux is the one of the equation
/// the density kind solves: Omega q p - D/2 dp/dq for the thermal kinds,
/// vbar p - D1/2 dp/dq for ConditionalQV. Throws PoleError at zeros of chi_q.
double fpe_residual(const GaussianDensity& g, const Eigen::VectorXd& q, double t);

/// Gauss-Hermite nodes x and weights w for int e^{-x^2} f(x) dx (Golub-Welsch).
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
GaussHermiteRule gauss_hermite(int n);

/// Averages the conditional density over v0 ~ Normal(0, kT/M) with n_quad
/// Gauss-Hermite nodes and returns |average - thermal density|.
///
/// With centered = true the rule is shifted and scaled to the v0-posterior at
/// (q, t) (adaptive Gauss-Hermite), which stays exact when the conditional
/// density is much narrower in v0 than the Maxwell width (small t). The plain
/// rule needs n_quad to resolve that ratio.
double maxwell_average_check(const PhysicalParams& p, double t, double q, double q0, int n_quad,
                             Mode mode = Mode::Classical, bool centered = true);

/// Long-format CSV "t,q,p" with one block per time.
void write_density_csv(const GaussianDensity& g, const Eigen::VectorXd& q, const Eigen::VectorXd& times,
                       std::ostream& os);

}  // namespace qbm

#endif  // QBM_PROPAGATOR_HPP
