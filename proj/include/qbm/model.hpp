#ifndef QBM_MODEL_HPP
#define QBM_MODEL_HPP

#include <complex>

namespace qbm {

enum class UnitMode { Reduced, SI };
enum class Regime { Overdamped, Critical, Underdamped };

const char* to_string(Regime regime);
const char* to_string(UnitMode units);

inline constexpr double kBoltzmannSI = 1.380649e-23;   // J/K
inline constexpr double kHbarSI = 1.054571817e-34;     // J s

// |omega^2| <= kCriticalTolerance * gamma^2 classifies the critical regime.
inline constexpr double kCriticalTolerance = 1e-12;

/// Bath and particle constants as supplied by the user.
struct RawParams {
  double mass = 1.0;
  double gamma = 1.0;
  double omega0_sq = 1.0;  // potential curvature, V(q) = omega0_sq q^2 / 2
  double temperature = 1.0;
  double hbar = 0.0;       // 0 selects the exact classical limit
};

/// Validated parameters with every derived constant the other modules use.
///
/// The damping roots satisfy lambda1 + lambda2 = gamma and
/// lambda1 * lambda2 = omega0_sq / mass. lambda1 is the root with the larger
/// real part (overdamped) or the positive imaginary part (underdamped).
struct PhysicalParams {
  double mass;
  double gamma;
  double omega0_sq;
  double temperature;
  double hbar;
  UnitMode units;

  double k_B;
  double kT;
  double beta;
  double omega_sq;  // gamma^2 - 4 omega0_sq / mass
  Regime regime;
  std::complex<double> lambda1;
  std::complex<double> lambda2;

  double restoring_rate() const { return omega0_sq / mass; }
  double velocity_variance() const { return kT / mass; }
  bool quantum() const { return hbar > 0.0; }

  /// First Matsubara frequency 2 pi / (hbar beta). Throws HbarZero when hbar = 0.
  double nu() const;

  /// Dimensionless quantumness hbar * beta * gamma.
  double hbar_beta_gamma() const { return hbar * beta * gamma; }
};

PhysicalParams derive(const RawParams& raw, UnitMode units = UnitMode::Reduced);

/// Reduced-unit parameters with hbar chosen so that hbar*beta*gamma = ratio.
PhysicalParams with_quantumness(const PhysicalParams& p, double hbar_beta_gamma);

/// Copy of p with omega0_sq chosen so that omega^2 = gamma^2 - 4 omega0_sq/M
/// equals omega_sq. Used for regime perturbations.
PhysicalParams with_omega_sq(const PhysicalParams& p, double omega_sq);

/// Same parameters at a different temperature.
PhysicalParams with_temperature(const PhysicalParams& p, double temperature);

RawParams raw(const PhysicalParams& p);

}  // namespace qbm

#endif  // QBM_MODEL_HPP
