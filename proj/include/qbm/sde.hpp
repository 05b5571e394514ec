#ifndef QBM_SDE_HPP
#define QBM_SDE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>

#include <Eigen/Core>

#include "qbm/model.hpp"
#include "qbm/propagator.hpp"
#include "qbm/report.hpp"

namespace qbm {

// ---------------------------------------------------------------------------
// Counter-based random numbers

/// Philox4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Independent stream for one (seed, stream, path) triple. The block counter
/// occupies the low word, so a path can draw 2^33 normals before wrapping.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint32_t stream, std::uint64_t path);

  double uniform();  // in (0, 1), 53-bit resolution
  double normal();   // Box-Muller

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class Stream : std::uint32_t { Reduced = 0, Langevin = 1 };

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleStats {
  Eigen::VectorXd t;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // unbiased
  Eigen::VectorXd se_mean;
  Eigen::VectorXd se_variance;
  long n_paths = 0;
  std::uint64_t seed = 0;
};

struct Ensemble {
  EnsembleStats stats;
  Eigen::MatrixXd samples;  // n_paths x n_times
};

/// Per-time statistics from a path block; sums are pairwise in path order,
/// so the result does not depend on how paths were distributed over threads.
EnsembleStats summarize(const Eigen::MatrixXd& samples, const Eigen::VectorXd& t, std::uint64_t seed = 0);

/// Pairwise (cascade) sum in index order.
double pairwise_sum(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Reduced SDE dq = (omega(t) q + vbar(t)) dt + sqrt(D(t)) dB.
using SdeCoefficientFn = std::function<FpeCoefficients(double)>;

struct SdeConfig {
  long n_paths = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Euler-Maruyama with coefficients at step midpoints, all paths from q0.
/// Steps are shortened so every output time is hit exactly.
Ensemble simulate_reduced(const SdeCoefficientFn& coefficients, double q0, const Eigen::VectorXd& times,
                          const SdeConfig& cfg);

/// Classical reduced SDE dq = Omega q dt + sqrt(D_CL) dB. Throws PoleWindow when
/// chi_q vanishes in (0, t_final].
Ensemble simulate_reduced(const PhysicalParams& p, double q0, const Eigen::VectorXd& times, const SdeConfig& cfg);

/// Exact mean and variance of the Euler-Maruyama recursion used by
/// simulate_reduced (no sampling noise): m <- (1 + w h) m + b h, v <- (1 + w h)^2 v + D h.
struct MomentPath {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};
MomentPath euler_maruyama_moments(const SdeCoefficientFn& coefficients, double q0, const Eigen::VectorXd& times,
                                  double dt);

SdeCoefficientFn reduced_coefficients(const PhysicalParams& p);

struct InitialVelocity {
  bool thermal = true;
  double v0 = 0.0;  // used when thermal is false

  static InitialVelocity fixed(double v) { return {false, v}; }
  static InitialVelocity maxwell() { return {true, 0.0}; }
};

struct LangevinEnsemble {
  Ensemble position;
  Eigen::MatrixXd velocity;  // n_paths x n_times
};

/// Underdamped Langevin dynamics M dv = -M g v dt - w0^2 q dt + sqrt(2 kT g M) dB,
/// dq = v dt, with the BAOAB splitting (exact Ornstein-Uhlenbeck velocity substep).
LangevinEnsemble simulate_langevin(const PhysicalParams& p, double q0, InitialVelocity v0, const Eigen::VectorXd& times,
                                   const SdeConfig& cfg);

// ---------------------------------------------------------------------------
// Distribution tests

/// sup |F_n - F| for the sample against a continuous CDF.
double ks_statistic(Eigen::VectorXd sample, const std::function<double(double)>& cdf);
/// sup |F_n - G_m| between two samples.
double ks_statistic(Eigen::VectorXd a, Eigen::VectorXd b);
/// Asymptotic critical value sqrt(-ln(alpha/2)/2) / sqrt(n_eff), n_eff = n m / (n + m)
/// for two samples (pass m = 0 for one sample).
double ks_critical(long n, long m, double alpha = 0.05);

/// Per-time z-scores of means and variances between two ensembles and between
/// each ensemble and the analytic Gaussian; passes iff every |z| <= z_max.
ValidationReport equivalence_report(const EnsembleStats& a, const EnsembleStats& b, const GaussianDensity& analytic,
                                    double z_max = 4.0);

void write_csv(const EnsembleStats& stats, std::ostream& os);

/// Little-endian: uint64 n_paths, uint64 n_times, then n_paths * n_times
/// doubles, one path per row.
void write_binary(const Eigen::MatrixXd& samples, std::ostream& os);
Eigen::MatrixXd read_binary(std::istream& is);

nlohmann::json to_json(const SdeConfig& cfg);

}  // namespace qbm

#endif  // QBM_SDE_HPP
