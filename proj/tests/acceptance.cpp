// One line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "qbm/validation.hpp"

using namespace qbm;

namespace {

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0: none stated
  std::function<ValidationReport()> run;
};

}  // namespace

int main() {
  SuiteOptions opts;  // overdamped benchmark: M = 1, gamma = 1, w0^2 = 0.16, T = 1, q0 = 1
  const PhysicalParams& p = opts.params;

  const Criterion criteria[] = {
      {1, "representation equality", 10.0, [] { return check_representation_equality(); }},
      {2, "classical-limit collapse", 60.0, [&] { return check_classical_limit(p); }},
      {3, "sigma consistency", 0.0, [&] { return check_sigma_consistency(p); }},
      {4, "FPE residual identity", 10.0, [&] { return check_fpe_identity(p, opts.q0); }},
      {5, "FPE solver convergence", 120.0, [&] { return check_fpe_convergence(p, opts.q0); }},
      {6, "SDE equivalence", 180.0, [&] { return check_sde_equivalence(opts); }},
      {7, "stationarity identity", 0.0, [&] { return check_stationarity(p); }},
      {8, "equipartition endpoint", 0.0, [&] { return check_equipartition(opts); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    ValidationReport r;
    std::string error;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.time_limit_s == 0.0 || secs <= c.time_limit_s;
    const bool ok = error.empty() && r.passed() && in_time;
    if (!ok) ++failures;

    // the check furthest from its tolerance summarizes the criterion
    const Check* worst = nullptr;
    for (const Check& k : r.checks) {
      if (!worst || (!k.passed && worst->passed) ||
          (k.passed == worst->passed && k.measured / k.tolerance > worst->measured / worst->tolerance)) {
        worst = &k;
      }
    }
    std::printf("criterion %d %-26s %s  %.1fs", c.id, c.name, ok ? "PASS" : "FAIL", secs);
    if (c.time_limit_s > 0.0) std::printf(" (limit %.0fs)", c.time_limit_s);
    if (!error.empty()) {
      std::printf("  error: %s", error.c_str());
    } else if (worst) {
      std::printf("  %zu checks, worst: %s = %.3g (tol %.3g)", r.checks.size(), worst->name.c_str(), worst->measured,
                  worst->tolerance);
    }
    std::printf("\n");
    for (const Check& k : r.checks) {
      if (!k.passed) std::printf("    failed: %s = %.6g (tol %.3g) %s\n", k.name.c_str(), k.measured, k.tolerance, k.detail.c_str());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
