#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "qbm/errors.hpp"
#include "qbm/fpe.hpp"
#include "qbm/response.hpp"

using namespace qbm;

namespace {

PhysicalParams overdamped() { return derive({1.0, 1.0, 0.16, 1.0, 0.0}); }
PhysicalParams underdamped() { return derive({1.0, 0.5, 1.0, 1.0, 0.0}); }

Eigen::VectorXd times(std::initializer_list<double> ts) {
  Eigen::VectorXd v(ts.size());
  Eigen::Index i = 0;
  for (double t : ts) v(i++) = t;
  return v;
}

SolverConfig cheap() {
  SolverConfig c;
  c.n_q = 801;
  c.dt = 1e-3;
  c.q0 = 1.0;
  return c;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("heat kernel") {
  SolverConfig c;
  const FpeStepper stepper([](double) { return FpeCoefficients{0.0, 0.0, 2.0}; }, c);
  const double s2 = 1.0;
  const auto out = advance(stepper, gaussian_field(2001, 10.0, 0.0, std::sqrt(s2)), times({0.5, 1.0}), 1e-3);
  for (const auto& f : out) {
    const double var = s2 + 2.0 * f.t;
    const Eigen::VectorXd exact = (1.0 / std::sqrt(2.0 * M_PI * var)) * (-0.5 * f.q.array().square() / var).exp().matrix();
    CHECK((f.values - exact).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("constant drift without diffusion translates the mean exponentially") {
  SolverConfig c;
  const double rate = -0.3;
  const FpeStepper stepper([&](double) { return FpeCoefficients{rate, 0.0, 0.0}; }, c);
  const auto out = advance(stepper, gaussian_field(2001, 4.0, 1.0, 0.1), times({1.0, 2.0}), 1e-3);
  for (const auto& f : out) {
    CHECK(f.mean() == doctest::Approx(std::exp(rate * f.t)).epsilon(1e-6));
    CHECK(std::sqrt(f.variance()) == doctest::Approx(0.1 * std::exp(rate * f.t)).epsilon(1e-4));
  }
}

TEST_CASE("classical benchmark matches the analytic Gaussians") {
  const auto p = overdamped();
  for (auto form : {FpeForm::PositionOnly, FpeForm::DriftVelocity}) {
    SolverConfig c = cheap();
    c.n_q = 2001;
    c.v0 = 0.5;
    const FpeRun run = solve(p, form, Mode::Classical, times({0.5, 1.0, 2.0}), c, true);
    REQUIRE(run.linf_error.size() == 3);
    for (double e : run.linf_error) CHECK(e <= 1e-3);
    CHECK(run.stats.max_mass_drift <= 1e-8);
    CHECK(run.stats.min_value >= -1e-12);

    // moments against chi_q q0 (+ chi_v v0) and the variance columns
    const GaussianDensity exact = analytic_solution(p, form, Mode::Classical, run.config);
    const double h = run.snapshots.back().dq();
    for (const auto& f : run.snapshots) {
      CHECK(std::abs(f.mean() - exact.mean(f.t)) <= h * h + 1e-3 * c.dt + 1e-9);
      CHECK(std::abs(f.variance() - exact.variance(f.t)) <= h * h + 1e-3 * c.dt + 1e-9);
    }
  }
}

TEST_CASE("snapshot times are hit exactly") {
  const FpeRun run = solve(overdamped(), FpeForm::PositionOnly, Mode::Classical, times({0.0, 0.3333, 1.0 / 3.0 + 0.5}),
                           cheap());
  CHECK(run.snapshots[0].t == 0.0);
  CHECK(run.snapshots[1].t == 0.3333);
  CHECK(run.snapshots[2].t == 1.0 / 3.0 + 0.5);
}

TEST_CASE("second-order convergence under grid refinement") {
  const auto p = overdamped();
  SolverConfig coarse = cheap();
  coarse.n_q = 401;
  coarse = resolve_config(p, FpeForm::PositionOnly, Mode::Classical, 2.0, coarse);
  SolverConfig fine = coarse;
  fine.n_q = 2 * coarse.n_q - 1;
  const double e1 = solve(p, FpeForm::PositionOnly, Mode::Classical, times({2.0}), coarse, true).linf_error.back();
  const double e2 = solve(p, FpeForm::PositionOnly, Mode::Classical, times({2.0}), fine, true).linf_error.back();
  CHECK(e1 / e2 >= 3.2);
  CHECK(e1 / e2 <= 4.8);

  // the upwind split is first order in space
  coarse.scheme = fine.scheme = Scheme::UpwindSplit;
  const double u1 = solve(p, FpeForm::PositionOnly, Mode::Classical, times({2.0}), coarse, true).linf_error.back();
  const double u2 = solve(p, FpeForm::PositionOnly, Mode::Classical, times({2.0}), fine, true).linf_error.back();
  CHECK(u1 / u2 >= 1.6);
  CHECK(u1 / u2 <= 2.4);
}

TEST_CASE("zero-temperature limit advects the mean") {
  const auto p = derive({1.0, 1.0, 0.16, 1e-10, 0.0});
  SolverConfig c = cheap();
  c.half_width = 2.0;
  const FpeRun run = solve(p, FpeForm::PositionOnly, Mode::Classical, times({0.5, 1.0, 2.0, 4.0}), c);
  const double h = run.snapshots.front().dq();
  for (const auto& f : run.snapshots) {
    CHECK(std::abs(f.mean() - chi_q(p, f.t)) <= h);
    CHECK(std::sqrt(f.variance()) <= run.config.width + h);
  }
}

TEST_CASE("Maxwell-averaged drift-velocity runs reproduce the position-only form") {
  const auto p = overdamped();
  const double tf = 1.0;
  SolverConfig c = cheap();
  c.n_q = 601;
  c.half_width = 12.0;
  c.width = 0.15;
  const DensityField avg = maxwell_averaged_solve(p, Mode::Classical, tf, c, 20);

  // the position-only run starts wider so both analytic solutions coincide at tf
  SolverConfig a = c;
  a.width = c.width / std::abs(chi_q(p, tf));
  const FpeRun adel = solve(p, FpeForm::PositionOnly, Mode::Classical, times({tf}), a, true);
  const GaussianDensity exact = analytic_solution(p, FpeForm::PositionOnly, Mode::Classical, adel.config);
  const Eigen::VectorXd ref = exact.density(avg.q, tf);
  const double peak = ref.maxCoeff();
  CHECK((avg.values - adel.snapshots.back().values).cwiseAbs().maxCoeff() <= 1e-3 * peak);
  CHECK((avg.values - ref).cwiseAbs().maxCoeff() <= 1e-3 * peak);
}

TEST_CASE("absorbing boundaries lose mass monotonically") {
  SolverConfig c = cheap();
  c.boundary = Boundary::Absorbing;
  const FpeStepper stepper([](double) { return FpeCoefficients{0.0, 0.0, 2.0}; }, c);
  const auto out = advance(stepper, gaussian_field(401, 3.0, 0.0, 0.5), times({0.5, 1.0, 2.0}), 1e-3);
  double prev = 1.0;
  for (const auto& f : out) {
    CHECK(f.mass() < prev);
    prev = f.mass();
  }
}

TEST_CASE("step errors") {
  SolverConfig c = cheap();
  auto field = gaussian_field(101, 5.0, 0.0, 0.5);

  const FpeStepper negative([](double) { return FpeCoefficients{0.0, 0.0, -1.0}; }, c);
  const Eigen::VectorXd before = field.values;
  CHECK(code_of([&] { negative.step(field, 1e-3); }) == ErrorCode::NegativeDiffusion);
  CHECK(field.values == before);

  const FpeStepper stiff([](double) { return FpeCoefficients{-5.0, 0.0, 1.0}; }, c);
  CHECK(code_of([&] { stiff.step(field, 0.1); }) == ErrorCode::CFLViolation);

  const auto u = underdamped();
  const double pole = chi_q_zeros(u, 0.0, 10.0).front();
  CHECK(code_of([&] { solve(u, FpeForm::PositionOnly, Mode::Classical, times({pole + 0.5}), cheap()); }) ==
        ErrorCode::PoleWindow);
  // the drift-velocity form has no Omega and runs through the pole
  const FpeRun through = solve(u, FpeForm::DriftVelocity, Mode::Classical, times({pole + 0.5}), cheap(), true);
  CHECK(through.linf_error.back() <= 1e-3);

  CHECK(code_of([&] { solve(overdamped(), FpeForm::PositionOnly, Mode::Quantum, times({1.0}), cheap()); }) ==
        ErrorCode::HbarZero);
}

TEST_CASE("quantum runs") {
  const auto p = with_quantumness(overdamped(), 1.0);
  // negative diffusion near t = 0 aborts the run
  CHECK(code_of([&] { solve(p, FpeForm::PositionOnly, Mode::Quantum, times({0.5}), cheap()); }) ==
        ErrorCode::NegativeDiffusion);

  SolverConfig c = cheap();
  c.n_q = 401;
  c.dt = 1e-2;
  c.t_start = 1.0;
  for (auto form : {FpeForm::PositionOnly, FpeForm::DriftVelocity}) {
    const FpeRun run = solve(p, form, Mode::Quantum, times({1.5, 2.0}), c, true);
    for (double e : run.linf_error) CHECK(e <= 1e-3);
  }
}

TEST_CASE("CSV and manifest") {
  const auto p = overdamped();
  const FpeRun run = solve(p, FpeForm::PositionOnly, Mode::Classical, times({0.5, 1.0}), cheap(), true);
  std::ostringstream os;
  write_csv(run.snapshots.back(), os);
  CHECK(os.str().rfind("q,p\n", 0) == 0);
  const auto j = manifest(run, p);
  CHECK(j["snapshots"].size() == 2);
  CHECK(j["snapshots"][1].contains("linf_error"));
  CHECK(j["config"]["scheme"] == "crank_nicolson");
}
