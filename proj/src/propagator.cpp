#include "qbm/propagator.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "qbm/errors.hpp"
#include "qbm/response.hpp"

namespace qbm {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double conditional_variance(const PhysicalParams& p, double t, Mode mode, const QuantumOptions& opts) {
  return mode == Mode::Quantum ? sigma1_quantum(p, t, opts).value : sigma1_classical(p, t);
}

double conditional_variance_dot(const PhysicalParams& p, double t, Mode mode, const QuantumOptions& opts) {
  return mode == Mode::Quantum ? d1_quantum(p, t, opts).value : d1_classical(p, t);
}

}  // namespace

const char* to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::ConditionalQV: return "conditional-qv";
    case DensityKind::ThermalQ: return "thermal-q";
    case DensityKind::ClassicalQ: return "classical-q";
  }
  return "?";
}

GaussianDensity::GaussianDensity(const PhysicalParams& p, DensityKind kind, double q0, double v0,
                                 const QuantumOptions& opts)
    : params_(p), kind_(kind), options_(opts), q0_(q0), v0_(v0) {
  mode_ = (kind != DensityKind::ClassicalQ && p.quantum()) ? Mode::Quantum : Mode::Classical;
  if (kind != DensityKind::ConditionalQV) v0_ = 0.0;
}

GaussianDensity GaussianDensity::with_initial_variance(double s2) const {
  if (!(s2 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "initial variance must be >= 0");
  GaussianDensity g = *this;
  g.initial_variance_ = s2;
  return g;
}

double GaussianDensity::mean(double t) const {
  const auto s = susceptibilities(params_, t);
  return s.chi_q * q0_ + s.chi_v * v0_;
}

double GaussianDensity::mean_dot(double t) const {
  const auto s = susceptibilities(params_, t);
  return s.chi_q_dot * q0_ + s.chi_v_dot * v0_;
}

double GaussianDensity::variance(double t) const {
  if (kind_ == DensityKind::ConditionalQV) {
    return conditional_variance(params_, t, mode_, options_) + initial_variance_;
  }
  const double cq = chi_q(params_, t);
  return sigma_q(params_, t, mode_, options_) + initial_variance_ * cq * cq;
}

double GaussianDensity::variance_dot(double t) const {
  if (kind_ == DensityKind::ConditionalQV) return conditional_variance_dot(params_, t, mode_, options_);
  const auto s = susceptibilities(params_, t);
  return sigma_q_dot(params_, t, mode_, options_) + 2.0 * initial_variance_ * s.chi_q * s.chi_q_dot;
}

double GaussianDensity::density(double q, double t) const {
  const double var = variance(t);
  if (!(var > 0.0)) throw Error(ErrorCode::DegenerateVariance, "variance " + std::to_string(var) + " at t = " + std::to_string(t));
  const double z = q - mean(t);
  return kInvSqrt2Pi / std::sqrt(var) * std::exp(-0.5 * z * z / var);
}

Eigen::VectorXd GaussianDensity::density(const Eigen::VectorXd& q, double t) const {
  const double var = variance(t);
  if (!(var > 0.0)) throw Error(ErrorCode::DegenerateVariance, "variance " + std::to_string(var) + " at t = " + std::to_string(t));
  const double m = mean(t);
  return (kInvSqrt2Pi / std::sqrt(var)) * (-0.5 * (q.array() - m).square() / var).exp().matrix();
}

double GaussianDensity::cdf(double q, double t) const {
  const double var = variance(t);
  if (!(var > 0.0)) throw Error(ErrorCode::DegenerateVariance, "variance " + std::to_string(var) + " at t = " + std::to_string(t));
  return 0.5 * std::erfc(-(q - mean(t)) / std::sqrt(2.0 * var));
}

double gaussian_fpe_residual(double mean, double mean_dot, double variance, double variance_dot,
                             const FpeCoefficients& c, const Eigen::VectorXd& q) {
  if (!(variance > 0.0)) throw Error(ErrorCode::DegenerateVariance, "variance " + std::to_string(variance));
  const double var = variance;
  const Eigen::ArrayXd z = q.array() - mean;
  const Eigen::ArrayXd dens = (kInvSqrt2Pi / std::sqrt(var)) * (-0.5 * z.square() / var).exp();
  const Eigen::ArrayXd dt =
      dens * (-0.5 * variance_dot / var + z * mean_dot / var + z.square() * variance_dot / (2.0 * var * var));
  const Eigen::ArrayXd dq = -dens * z / var;
  const Eigen::ArrayXd dqq = dens * (z.square() / (var * var) - 1.0 / var);
  const Eigen::ArrayXd drift = c.omega * q.array() + c.vbar;
  const Eigen::ArrayXd r = dt + c.omega * dens + drift * dq - 0.5 * c.diffusion * dqq;
  return r.abs().maxCoeff();
}

double fpe_residual(const GaussianDensity& g, const Eigen::VectorXd& q, double t) {
  const PhysicalParams& p = g.params();
  FpeCoefficients c;
  if (g.kind() == DensityKind::ConditionalQV) {
    c.vbar = drift_velocity(p, t, g.q0(), g.v0());
    c.diffusion = conditional_variance_dot(p, t, g.mode(), g.options());
  } else {
    c.omega = omega_drift(p, t);
    c.diffusion = d_fpe(p, t, g.mode(), g.options());
  }
  return gaussian_fpe_residual(g.mean(t), g.mean_dot(t), g.variance(t), g.variance_dot(t), c, q);
}

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Hermite order must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = std::sqrt(M_PI) * es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

double maxwell_average_check(const PhysicalParams& p, double t, double q, double q0, int n_quad, Mode mode,
                             bool centered) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be > 0");
  const auto s = susceptibilities(p, t);
  const double sig1 = conditional_variance(p, t, mode, QuantumOptions{});
  if (!(sig1 > 0.0)) throw Error(ErrorCode::DegenerateVariance, "conditional variance " + std::to_string(sig1));
  const double vel_var = p.velocity_variance();
  const double z0 = q - s.chi_q * q0;

  auto conditional = [&](double v0) {
    const double z = z0 - s.chi_v * v0;
    return kInvSqrt2Pi / std::sqrt(sig1) * std::exp(-0.5 * z * z / sig1);
  };
  auto maxwell = [&](double v0) { return kInvSqrt2Pi / std::sqrt(vel_var) * std::exp(-0.5 * v0 * v0 / vel_var); };

  const GaussHermiteRule rule = gauss_hermite(n_quad);
  double avg = 0.0;
  if (centered) {
    const double precision = 1.0 / vel_var + s.chi_v * s.chi_v / sig1;
    const double centre = s.chi_v * z0 / sig1 / precision;
    const double scale = std::sqrt(2.0 / precision);
    for (int i = 0; i < n_quad; ++i) {
      const double x = rule.nodes(i);
      const double v0 = centre + scale * x;
      avg += rule.weights(i) * std::exp(x * x) * scale * conditional(v0) * maxwell(v0);
    }
  } else {
    const double scale = std::sqrt(2.0 * vel_var);
    for (int i = 0; i < n_quad; ++i) avg += rule.weights(i) * conditional(scale * rule.nodes(i));
    avg /= std::sqrt(M_PI);
  }

  const double var = sig1 + vel_var * s.chi_v * s.chi_v;
  const double closed = kInvSqrt2Pi / std::sqrt(var) * std::exp(-0.5 * z0 * z0 / var);
  return std::abs(avg - closed);
}

void write_density_csv(const GaussianDensity& g, const Eigen::VectorXd& q, const Eigen::VectorXd& times,
                       std::ostream& os) {
  os.precision(17);
  os << "t,q,p\n";
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const Eigen::VectorXd dens = g.density(q, times(k));
    for (Eigen::Index i = 0; i < q.size(); ++i) os << times(k) << ',' << q(i) << ',' << dens(i) << '\n';
  }
}

}  // namespace qbm
