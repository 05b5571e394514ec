#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result qbm_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = qbm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qbm_cli_test" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::vector<double>> read_rows(const fs::path& p, std::string* header = nullptr) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("coeffs writes one row per grid time") {
  const fs::path dir = scratch("coeffs");
  const Result r = qbm_run({"coeffs", "--classical", "--t-max", "10", "--n", "200", "--out", dir.string()});
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = read_rows(dir / "coeffs.csv", &header);
  CHECK(header == "t,omega,d1,sigma1,sigma_q,d_fpe");
  REQUIRE(rows.size() == 200);
  CHECK(rows.back()[0] == doctest::Approx(10.0));

  // overdamped benchmark: rates 0.8 and 0.2, chi_q = (a e^{-bt} - b e^{-at})/(a - b)
  const double a = 0.8, b = 0.2;
  for (const auto& row : rows) {
    const double t = row[0];
    if (t == 0.0) continue;
    const double chi = (a * std::exp(-b * t) - b * std::exp(-a * t)) / (a - b);
    const double chi_dot = a * b * (std::exp(-a * t) - std::exp(-b * t)) / (a - b);
    CHECK(row[1] == doctest::Approx(chi_dot / chi).epsilon(1e-10));
  }
  const json side = read_json(dir / "coeffs.json");
  CHECK(side.is_object());
  const json m = read_json(dir / "manifest.json");
  CHECK(m["command"] == "coeffs");
  CHECK(m["exit_code"] == 0);
}

TEST_CASE("quantum mode without hbar is an input error") {
  const fs::path dir = scratch("nohbar");
  const Result r = qbm_run({"coeffs", "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("--hbar") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "coeffs.csv"));
  CHECK(read_json(dir / "manifest.json")["error"]["code"] == "InvalidArgument");
}

TEST_CASE("coeffs --validate reports the sigma checks") {
  const fs::path dir = scratch("validate");
  const Result r =
      qbm_run({"coeffs", "--hbar", "1", "--t-max", "5", "--n", "40", "--validate", "--out", dir.string()});
  CHECK(r.code == 0);
  const json v = read_json(dir / "validation.json");
  CHECK(v["passed"] == true);
  CHECK(v["checks"].size() > 0);
}

TEST_CASE("fpe compares against the analytic density") {
  const fs::path dir = scratch("fpe");
  const Result r = qbm_run({"fpe", "--classical", "--form", "adelman", "--compare-analytic", "--dt", "1e-3",
                            "--snapshots", "2", "--t-max", "2", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const json m = read_json(dir / "manifest.json");
  REQUIRE(m["fpe"]["linf_error"].size() == 2);
  for (const auto& e : m["fpe"]["linf_error"]) CHECK(e.get<double>() < 1e-3);
  std::string header;
  const auto rows = read_rows(dir / "snapshot_001.csv", &header);
  CHECK(header == "q,p");
  CHECK(rows.size() == 2001);
}

TEST_CASE("fpe rejects an unknown scheme") {
  const fs::path dir = scratch("badscheme");
  CHECK(qbm_run({"fpe", "--classical", "--scheme", "leapfrog", "--out", dir.string()}).code == 1);
}

TEST_CASE("sde output is reproducible for a seed") {
  const fs::path a = scratch("sde_a"), b = scratch("sde_b"), c = scratch("sde_c");
  const std::vector<std::string> base = {"sde", "--classical", "--paths", "1000", "--seed", "7", "--n", "10"};
  auto with = [&](const fs::path& dir, const std::string& threads) {
    auto args = base;
    args.insert(args.end(), {"--threads", threads, "--dump", "--out", dir.string()});
    return qbm_run(args).code;
  };
  REQUIRE(with(a, "1") == 0);
  REQUIRE(with(b, "3") == 0);
  CHECK(slurp(a / "sde.csv") == slurp(b / "sde.csv"));
  CHECK(slurp(a / "paths.bin") == slurp(b / "paths.bin"));

  auto args = base;
  args[5] = "8";
  args.insert(args.end(), {"--out", c.string()});
  REQUIRE(qbm_run(args).code == 0);
  CHECK(slurp(a / "sde.csv") != slurp(c / "sde.csv"));
}

TEST_CASE("sde refuses quantum mode") {
  const fs::path dir = scratch("sde_quantum");
  const Result r = qbm_run({"sde", "--hbar", "1", "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("--classical") != std::string::npos);
}

TEST_CASE("run.conf reproduces the run and flags override it") {
  const fs::path a = scratch("conf_a"), b = scratch("conf_b"), c = scratch("conf_c");
  REQUIRE(qbm_run({"coeffs", "--classical", "--temp", "2", "--n", "30", "--out", a.string()}).code == 0);
  const std::string conf = (a / "run.conf").string();
  REQUIRE(qbm_run({"coeffs", "--config", conf, "--out", b.string()}).code == 0);
  CHECK(slurp(a / "coeffs.csv") == slurp(b / "coeffs.csv"));

  REQUIRE(qbm_run({"coeffs", "--config", conf, "--n", "12", "--out", c.string()}).code == 0);
  CHECK(read_rows(c / "coeffs.csv").size() == 12);
  CHECK(read_json(c / "manifest.json")["params"]["temperature"] == 2.0);
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path dir = scratch("conf_bad");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.conf") << "bogus=1\n";
  CHECK(qbm_run({"coeffs", "--classical", "--config", (dir / "bad.conf").string()}).code == 1);
}

TEST_CASE("thread count falls back to QBM_THREADS") {
  const fs::path dir = scratch("threads");
  setenv("QBM_THREADS", "3", 1);
  REQUIRE(qbm_run({"sde", "--classical", "--paths", "100", "--n", "2", "--out", dir.string()}).code == 0);
  unsetenv("QBM_THREADS");
  CHECK(read_json(dir / "manifest.json")["threads"] == 3);
  CHECK(read_json(dir / "sde.json")["config"]["threads"] == 3);
}

TEST_CASE("every file lands inside --out") {
  const fs::path dir = scratch("contained");
  REQUIRE(qbm_run({"fpe", "--classical", "--nq", "401", "--dt", "1e-2", "--snapshots", "1", "--plot", "--out",
                   dir.string()})
              .code == 0);
  const json m = read_json(dir / "manifest.json");
  for (const auto& f : m["files"]) CHECK(fs::exists(dir / f.get<std::string>()));
  CHECK(fs::exists(dir / "fpe.gp"));
}

TEST_CASE("parse errors and help") {
  CHECK(qbm_run({}).code == 1);
  CHECK(qbm_run({"coeffs", "--n", "many"}).code == 1);
  const Result h = qbm_run({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("coeffs") != std::string::npos);
  CHECK(qbm_run({"--version"}).out == std::string(qbm::cli::kVersion) + "\n");
}
