#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "qbm/errors.hpp"
#include "qbm/model.hpp"

using namespace qbm;

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

TEST_CASE("overdamped roots") {
  const auto p = derive({1.0, 1.0, 0.16, 1.0, 0.0});
  CHECK(p.regime == Regime::Overdamped);
  CHECK(p.lambda1.real() == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p.lambda2.real() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(p.omega_sq == doctest::Approx(0.36).epsilon(1e-15));
  CHECK(p.beta == 1.0);
  CHECK_FALSE(p.quantum());
  CHECK_THROWS_AS(p.nu(), Error);
}

TEST_CASE("critical roots") {
  const auto p = derive({1.0, 2.0, 1.0, 1.0, 1.0});
  CHECK(p.regime == Regime::Critical);
  CHECK(p.lambda1 == std::complex<double>(1.0, 0.0));
  CHECK(p.lambda2 == std::complex<double>(1.0, 0.0));
  CHECK(p.omega_sq == 0.0);
  CHECK(p.nu() == doctest::Approx(2.0 * M_PI));
}

TEST_CASE("underdamped roots against long-double quadratic formula") {
  const auto p = derive({1.0, 0.5, 1.0, 1.0, 1.0});
  CHECK(p.regime == Regime::Underdamped);
  const long double im = std::sqrt(4.0L * 1.0L - 0.25L) / 2.0L;
  CHECK(p.lambda1.real() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(std::abs(p.lambda1.imag() - static_cast<double>(im)) <= 4 * kEps);
  CHECK(p.lambda1.imag() > 0.0);
  CHECK(p.lambda2 == std::conj(p.lambda1));
  CHECK(p.omega_sq == doctest::Approx(-3.75));
  CHECK(std::abs(p.lambda1.imag() - 0.9682458365518543) <= 4 * kEps);
}

TEST_CASE("Vieta identities on a parameter sweep") {
  for (double g : {0.0, 1e-3, 0.3, 1.0, 2.0, 7.5, 100.0}) {
    for (double w0 : {1e-4, 0.16, 1.0, 3.0, 50.0}) {
      for (double m : {0.5, 1.0, 4.0}) {
        const auto p = derive({m, g, w0, 1.0, 0.0});
        const auto sum = p.lambda1 + p.lambda2;
        const auto prod = p.lambda1 * p.lambda2;
        CHECK(std::abs(sum - g) <= 8 * kEps * std::max(g, 1e-300));
        CHECK(std::abs(prod - w0 / m) <= 8 * kEps * (w0 / m));
      }
    }
  }
}

TEST_CASE("regime flips across the critical curvature") {
  const auto base = derive({1.0, 1.0, 0.25, 1.0, 0.0});
  CHECK(base.regime == Regime::Critical);
  CHECK(derive({1.0, 1.0, 0.25 * (1 - 1e-6), 1.0, 0.0}).regime == Regime::Overdamped);
  CHECK(derive({1.0, 1.0, 0.25 * (1 + 1e-6), 1.0, 0.0}).regime == Regime::Underdamped);
  CHECK(with_omega_sq(base, 1e-4).regime == Regime::Overdamped);
  CHECK(with_omega_sq(base, -1e-4).regime == Regime::Underdamped);
}

TEST_CASE("input validation") {
  auto code_of = [](RawParams r) {
    try {
      derive(r);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of({0.0, 1.0, 1.0, 1.0, 0.0}) == ErrorCode::NonPositiveMass);
  CHECK(code_of({1.0, 1.0, 1.0, 0.0, 0.0}) == ErrorCode::NonPositiveTemperature);
  CHECK(code_of({1.0, 1.0, 0.0, 1.0, 0.0}) == ErrorCode::NonPositiveCurvature);
  CHECK(code_of({1.0, -1.0, 1.0, 1.0, 0.0}) == ErrorCode::NegativeFriction);
  CHECK(code_of({1.0, 1.0, 1.0, 1.0, -1.0}) == ErrorCode::NegativeHbar);
  CHECK(is_input_error(ErrorCode::NonPositiveMass));
  CHECK_FALSE(is_input_error(ErrorCode::NoConvergence));
}

TEST_CASE("SI units use the SI Boltzmann constant") {
  const auto p = derive({1e-26, 1e12, 1e-3, 300.0, kHbarSI}, UnitMode::SI);
  CHECK(p.kT == doctest::Approx(kBoltzmannSI * 300.0));
  CHECK(p.hbar_beta_gamma() == doctest::Approx(kHbarSI * 1e12 / (kBoltzmannSI * 300.0)));
}

TEST_CASE("quantumness helper") {
  const auto p = with_quantumness(derive({1.0, 1.0, 0.16, 1.0, 0.0}), 1e-4);
  CHECK(p.hbar_beta_gamma() == doctest::Approx(1e-4));
  CHECK(p.nu() == doctest::Approx(2 * M_PI / 1e-4));
}
