#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "qbm/errors.hpp"
#include "qbm/propagator.hpp"
#include "qbm/response.hpp"

using namespace qbm;

namespace {

PhysicalParams overdamped() { return derive({1.0, 1.0, 0.16, 1.0, 0.0}); }
PhysicalParams underdamped() { return derive({1.0, 0.5, 1.0, 1.0, 0.0}); }
PhysicalParams critical() { return derive({1.0, 2.0, 1.0, 1.0, 0.0}); }

Eigen::VectorXd around(const GaussianDensity& g, double t, int n = 401) {
  const double sd = std::sqrt(g.variance(t));
  return Eigen::VectorXd::LinSpaced(n, g.mean(t) - 8.0 * sd, g.mean(t) + 8.0 * sd);
}

double peak(const GaussianDensity& g, double t) { return 1.0 / std::sqrt(2.0 * M_PI * g.variance(t)); }

}  // namespace

TEST_CASE("peak value and delta limit") {
  const GaussianDensity g(overdamped(), DensityKind::ConditionalQV, 1.0, 0.5);
  for (double t : {0.3, 1.0, 4.0}) CHECK(g.density(g.mean(t), t) == doctest::Approx(peak(g, t)).epsilon(1e-15));
  CHECK_THROWS_AS(g.density(1.0, 0.0), Error);
  try {
    g.density(1.0, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateVariance);
  }
  // finite initial width removes the degeneracy
  CHECK(g.with_initial_variance(0.01).density(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 0.01)));
}

TEST_CASE("thermal density with q0 = 0 stays centred") {
  const GaussianDensity g(underdamped(), DensityKind::ThermalQ, 0.0);
  for (double t : oracle::linspace(0.0, 20.0, 41)) CHECK(g.mean(t) == 0.0);
}

TEST_CASE("normalisation and moments by quadrature") {
  for (const auto& p : {overdamped(), underdamped(), critical(), with_quantumness(overdamped(), 1.0)}) {
    for (auto kind : {DensityKind::ConditionalQV, DensityKind::ThermalQ, DensityKind::ClassicalQ}) {
      const GaussianDensity g = GaussianDensity(p, kind, 1.0, 0.5).with_initial_variance(0.02);
      for (double t : {0.7, 2.5}) {
        const double m = g.mean(t), sd = std::sqrt(g.variance(t));
        const double lo = m - 12.0 * sd, hi = m + 12.0 * sd;
        auto f = [&](double q) { return g.density(q, t); };
        const double mass = oracle::integrate(f, lo, hi, 1e-14);
        const double first = oracle::integrate([&](double q) { return q * f(q); }, lo, hi, 1e-14);
        const double second = oracle::integrate([&](double q) { return (q - first) * (q - first) * f(q); }, lo, hi, 1e-14);
        CHECK(std::abs(mass - 1.0) <= 1e-10);
        const auto s = susceptibilities(p, t);
        const double expected_mean = s.chi_q * 1.0 + (kind == DensityKind::ConditionalQV ? s.chi_v * 0.5 : 0.0);
        CHECK(std::abs(first - expected_mean) <= 1e-9);
        CHECK(std::abs(second - g.variance(t)) <= 1e-9 * g.variance(t));
      }
    }
  }
}

TEST_CASE("variance columns feed the densities") {
  const auto p = overdamped();
  const double t = 1.7;
  const auto s = susceptibilities(p, t);
  const GaussianDensity cond(p, DensityKind::ConditionalQV, 1.0, 0.5);
  const GaussianDensity thermal(p, DensityKind::ThermalQ, 1.0);
  CHECK(cond.variance(t) == doctest::Approx(sigma1_classical(p, t)).epsilon(1e-15));
  CHECK(thermal.variance(t) == doctest::Approx(sigma_classical(p, t)).epsilon(1e-13));
  // the initial width propagates as s^2 under translation and s^2 chi_q^2 under the Omega form
  CHECK(cond.with_initial_variance(0.1).variance(t) == doctest::Approx(sigma1_classical(p, t) + 0.1));
  CHECK(thermal.with_initial_variance(0.1).variance(t) ==
        doctest::Approx(sigma_classical(p, t) + 0.1 * s.chi_q * s.chi_q));
}

TEST_CASE("heat kernel residual") {
  const Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(201, -10.0, 10.0);
  for (double t : {0.0, 0.5, 3.0}) {
    const double var = 0.3 + 2.0 * t;
    CHECK(gaussian_fpe_residual(0.0, 0.0, var, 2.0, {0.0, 0.0, 2.0}, q) <= 1e-12);
  }
  // a wrong diffusion constant leaves a visible residual
  CHECK(gaussian_fpe_residual(0.0, 0.0, 0.3, 2.0, {0.0, 0.0, 1.0}, q) > 1e-2);
}

TEST_CASE("classical residual of the analytic Gaussian vanishes") {
  const auto p = overdamped();
  for (auto kind : {DensityKind::ConditionalQV, DensityKind::ClassicalQ}) {
    for (double s2 : {0.0, 0.05}) {
      const GaussianDensity g = GaussianDensity(p, kind, 1.0, 0.5).with_initial_variance(s2);
      for (double t : {0.2, 1.0, 5.0}) CHECK(fpe_residual(g, around(g, t), t) <= 1e-9 * peak(g, t));
    }
  }
  const GaussianDensity u(underdamped(), DensityKind::ClassicalQ, 1.0);
  CHECK(fpe_residual(u, around(u, 1.0), 1.0) <= 1e-9 * peak(u, 1.0));
}

TEST_CASE("analytic residual agrees with a finite-difference residual") {
  // independent derivatives: central differences of the density in t and q
  const auto p = overdamped();
  const GaussianDensity g(p, DensityKind::ClassicalQ, 1.0);
  const double t = 1.0, ht = 1e-4, hq = 1e-4;
  const double om = omega_drift(p, t), diff = d_classical(p, t);
  double worst = 0.0;
  for (double q : oracle::linspace(g.mean(t) - 3.0, g.mean(t) + 3.0, 61)) {
    const double pt = (g.density(q, t + ht) - g.density(q, t - ht)) / (2.0 * ht);
    auto flux_div = [&](double x) { return om * x * g.density(x, t); };
    const double adv = (flux_div(q + hq) - flux_div(q - hq)) / (2.0 * hq);
    const double lap = (g.density(q + hq, t) - 2.0 * g.density(q, t) + g.density(q - hq, t)) / (hq * hq);
    worst = std::max(worst, std::abs(pt + adv - 0.5 * diff * lap));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("quantum residual of the analytic Gaussian vanishes") {
  const auto p = with_quantumness(overdamped(), 1.0);
  for (auto kind : {DensityKind::ConditionalQV, DensityKind::ThermalQ}) {
    const GaussianDensity g(p, kind, 1.0, 0.5);
    for (double t : {1.0, 3.0}) {
      REQUIRE(g.variance(t) > 0.0);
      CHECK(fpe_residual(g, around(g, t), t) <= 1e-9 * peak(g, t));
    }
  }
}

TEST_CASE("residual reports chi_q poles") {
  const auto p = underdamped();
  const double pole = chi_q_zeros(p, 0.0, 10.0).front();
  const GaussianDensity g(p, DensityKind::ClassicalQ, 1.0);
  CHECK_THROWS_AS(fpe_residual(g, around(g, pole), pole), PoleError);
}

TEST_CASE("Gauss-Hermite rule integrates even monomials exactly") {
  for (int n : {5, 20, 40}) {
    const auto rule = gauss_hermite(n);
    for (int k = 0; k < n && k < 12; ++k) {
      const double exact = std::tgamma(k + 0.5);
      const double approx = (rule.weights.array() * rule.nodes.array().pow(2 * k)).sum();
      CHECK(std::abs(approx - exact) <= 1e-10 * exact);
    }
    CHECK(std::abs(rule.nodes.sum()) <= 1e-12);
  }
}

TEST_CASE("Maxwell average of the conditional density") {
  const auto p = overdamped();
  double worst = 0.0;
  for (double t : oracle::linspace(0.2, 6.0, 10)) {
    for (double q : oracle::linspace(-3.0, 4.0, 10)) worst = std::max(worst, maxwell_average_check(p, t, q, 1.0, 40));
  }
  CHECK(worst <= 1e-10);

  // near-delta regime
  const double t0 = 0.01 / p.gamma;
  const double sd0 = std::sqrt(sigma_classical(p, t0));
  for (double q : oracle::linspace(1.0 - 3.0 * sd0, 1.0 + 3.0 * sd0, 7)) {
    CHECK(maxwell_average_check(p, t0, q, 1.0, 40) <= 1e-10);
  }

  const auto hot = with_temperature(p, 2.0);
  worst = 0.0;
  for (double q : oracle::linspace(-3.0, 4.0, 10)) worst = std::max(worst, maxwell_average_check(hot, 2.0, q, 1.0, 40));
  CHECK(worst <= 1e-10);
  CHECK(sigma_classical(hot, 2.0) == doctest::Approx(2.0 * sigma_classical(p, 2.0)));

  // the plain rule converges once the conditional width is comparable to the Maxwell width
  worst = 0.0;
  for (double q : oracle::linspace(-3.0, 4.0, 10)) {
    worst = std::max(worst, maxwell_average_check(p, 3.0, q, 1.0, 40, Mode::Classical, false));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("classical density is the hbar -> 0 limit of the thermal density") {
  const auto p = overdamped();
  const GaussianDensity classical(p, DensityKind::ClassicalQ, 1.0);
  const GaussianDensity thermal(with_quantumness(p, 1e-4), DensityKind::ThermalQ, 1.0);
  for (double t : {0.5, 2.0, 8.0}) {
    const Eigen::VectorXd q = around(classical, t);
    const double dist = (classical.density(q, t) - thermal.density(q, t)).cwiseAbs().maxCoeff();
    CHECK(dist <= 1e-3 * peak(classical, t));
  }
}

TEST_CASE("density CSV export") {
  const GaussianDensity g(overdamped(), DensityKind::ClassicalQ, 1.0);
  std::ostringstream os;
  write_density_csv(g, Eigen::VectorXd::LinSpaced(11, -2.0, 2.0), Eigen::Vector2d(0.5, 1.0), os);
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  std::getline(is, line);
  CHECK(line == "t,q,p");
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 22);
}
