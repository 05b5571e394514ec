#include "qbm/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qbm/errors.hpp"

namespace qbm {

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::Overdamped: return "overdamped";
    case Regime::Critical: return "critical";
    case Regime::Underdamped: return "underdamped";
  }
  return "unknown";
}

const char* to_string(UnitMode units) {
  return units == UnitMode::SI ? "si" : "reduced";
}

double PhysicalParams::nu() const {
  if (!(hbar > 0.0)) {
    throw Error(ErrorCode::HbarZero, "Matsubara frequency requires hbar > 0");
  }
  return 2.0 * std::numbers::pi / (hbar * beta);
}

PhysicalParams derive(const RawParams& raw, UnitMode units) {
  auto fail = [](ErrorCode code, const char* name, double value) {
    std::ostringstream os;
    os << name << " = " << value;
    throw Error(code, os.str());
  };
  if (!(raw.mass > 0.0) || !std::isfinite(raw.mass)) fail(ErrorCode::NonPositiveMass, "mass", raw.mass);
  if (!(raw.temperature > 0.0) || !std::isfinite(raw.temperature)) {
    fail(ErrorCode::NonPositiveTemperature, "temperature", raw.temperature);
  }
  if (!(raw.omega0_sq > 0.0) || !std::isfinite(raw.omega0_sq)) {
    fail(ErrorCode::NonPositiveCurvature, "omega0_sq", raw.omega0_sq);
  }
  if (!(raw.gamma >= 0.0) || !std::isfinite(raw.gamma)) fail(ErrorCode::NegativeFriction, "gamma", raw.gamma);
  if (!(raw.hbar >= 0.0) || !std::isfinite(raw.hbar)) fail(ErrorCode::NegativeHbar, "hbar", raw.hbar);

  PhysicalParams p{};
  p.mass = raw.mass;
  p.gamma = raw.gamma;
  p.omega0_sq = raw.omega0_sq;
  p.temperature = raw.temperature;
  p.hbar = raw.hbar;
  p.units = units;
  p.k_B = units == UnitMode::SI ? kBoltzmannSI : 1.0;
  p.kT = p.k_B * p.temperature;
  p.beta = 1.0 / p.kT;

  const double rate = p.omega0_sq / p.mass;
  const double g = p.gamma;
  p.omega_sq = g * g - 4.0 * rate;

  if (std::abs(p.omega_sq) <= kCriticalTolerance * g * g) {
    p.regime = Regime::Critical;
    p.lambda1 = p.lambda2 = {0.5 * g, 0.0};
  } else if (p.omega_sq > 0.0) {
    p.regime = Regime::Overdamped;
    const double l1 = 0.5 * (g + std::sqrt(p.omega_sq));
    // Vieta form for the small root avoids cancellation when omega ~ gamma.
    p.lambda1 = {l1, 0.0};
    p.lambda2 = {rate / l1, 0.0};
  } else {
    p.regime = Regime::Underdamped;
    const double im = 0.5 * std::sqrt(-p.omega_sq);
    p.lambda1 = {0.5 * g, im};
    p.lambda2 = {0.5 * g, -im};
  }
  return p;
}

RawParams raw(const PhysicalParams& p) {
  return RawParams{p.mass, p.gamma, p.omega0_sq, p.temperature, p.hbar};
}

PhysicalParams with_quantumness(const PhysicalParams& p, double hbar_beta_gamma) {
  RawParams r = raw(p);
  if (!(p.gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "hbar*beta*gamma needs gamma > 0");
  r.hbar = hbar_beta_gamma / (p.beta * p.gamma);
  return derive(r, p.units);
}

PhysicalParams with_omega_sq(const PhysicalParams& p, double omega_sq) {
  RawParams r = raw(p);
  r.omega0_sq = p.mass * (p.gamma * p.gamma - omega_sq) / 4.0;
  return derive(r, p.units);
}

PhysicalParams with_temperature(const PhysicalParams& p, double temperature) {
  RawParams r = raw(p);
  r.temperature = temperature;
  return derive(r, p.units);
}

}  // namespace qbm
