#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "qbm/coefficients.hpp"
#include "qbm/errors.hpp"
#include "qbm/fpe.hpp"
#include "qbm/model.hpp"
#include "qbm/response.hpp"
#include "qbm/sde.hpp"
#include "qbm/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace qbm::cli {

namespace {

struct Common {
  double gamma = 1.0;
  double omega0_sq = 0.16;
  double mass = 1.0;
  double temp = 1.0;
  std::optional<double> hbar;
  bool classical = false;
  std::string units = "reduced";
  std::string out = "qbm-out";
  int threads = 0;
  bool plot = false;
  std::string config;
};

struct CoeffsOpts {
  double t_max = 10.0;
  int n = 200;
  int n_max = 0;
  double tol = 1e-14;
  bool validate = false;
};

struct FpeOpts {
  std::string form = "adelman";
  std::string scheme = "crank_nicolson";
  std::string boundary = "zero-flux";
  double q0 = 1.0;
  double v0 = 0.0;
  double t_max = 2.0;
  double t_start = 0.0;
  int snapshots = 4;
  int nq = 2001;
  double dt = 1e-4;
  bool compare_analytic = false;
};

struct SdeOpts {
  std::string model = "reduced";
  long paths = 10000;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double q0 = 1.0;
  std::optional<double> v0;  // Langevin only; thermal when absent
  double t_max = 5.0;
  int n = 50;
  bool dump = false;
};

struct ValidateOpts {
  std::string suite = "classical";
  long paths = 100000;
  std::uint64_t seed = 2024;
  double q0 = 1.0;
};

int default_threads() {
  if (const char* env = std::getenv("QBM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

PhysicalParams params_from(const Common& c) {
  RawParams r;
  r.gamma = c.gamma;
  r.omega0_sq = c.omega0_sq;
  r.mass = c.mass;
  r.temperature = c.temp;
  r.hbar = c.classical ? 0.0 : c.hbar.value_or(0.0);
  return derive(r, c.units == "si" ? UnitMode::SI : UnitMode::Reduced);
}

Mode mode_from(const Common& c) {
  if (c.classical) return Mode::Classical;
  if (!c.hbar) throw Error(ErrorCode::InvalidArgument, "quantum mode needs --hbar (or pass --classical)");
  if (!(*c.hbar > 0.0)) throw Error(ErrorCode::HbarZero, "--hbar must be > 0 in quantum mode");
  return Mode::Quantum;
}

// Output directory plus the list of files written into it.
class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name, bool binary = false) {
    files_.push_back(name);
    std::ofstream os(dir_ / name, binary ? std::ios::binary : std::ios::out);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + (dir_ / name).string());
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

void write_plot(Outputs& out, const std::string& name, const std::string& body) {
  out.open(name) << "set datafile separator ','\nset key autotitle columnhead\n" << body;
}

// ---------------------------------------------------------------------------

int cmd_coeffs(const Common& c, const CoeffsOpts& o, Outputs& out, json& manifest, std::ostream& log) {
  const PhysicalParams p = params_from(c);
  const Mode mode = mode_from(c);
  if (o.n < 2 || !(o.t_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "--n must be >= 2 and --t-max > 0");
  const QuantumOptions qo{o.n_max, o.tol};
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(o.n, 0.0, o.t_max);
  const CoefficientTable table = build_table(p, grid, mode, qo);

  auto csv = out.open("coeffs.csv");
  write_csv(table, csv);
  out.write_json("coeffs.json", sidecar(table));
  manifest["table"] = {{"rows", table.size()}, {"errors", table.errors.size()}, {"poles", table.poles.size()}};
  if (c.plot) {
    write_plot(out, "coeffs.gp",
               "set xlabel 't'\nplot 'coeffs.csv' using 1:2 with lines, '' using 1:3 with lines, "
               "'' using 1:5 with lines, '' using 1:6 with lines\n");
  }
  log << "wrote " << table.size() << " rows (" << to_string(mode) << ")\n";

  int status = table.ok() ? 0 : 2;
  if (!table.ok()) log << table.errors.size() << " rows failed; see coeffs.json\n";
  if (o.validate) {
    const ValidationReport report = coefficient_checks(p, mode, grid);
    out.write_json("validation.json", report.to_json());
    manifest["validation_passed"] = report.passed();
    log << "validation " << (report.passed() ? "passed" : "FAILED") << '\n';
    if (!report.passed()) status = 2;
  }
  return status;
}

int cmd_fpe(const Common& c, const FpeOpts& o, Outputs& out, json& manifest, std::ostream& log) {
  const PhysicalParams p = params_from(c);
  const Mode mode = mode_from(c);
  if (o.snapshots < 1 || !(o.t_max > o.t_start)) {
    throw Error(ErrorCode::InvalidArgument, "--snapshots must be >= 1 and --t-max > --t-start");
  }
  SolverConfig cfg;
  cfg.dt = o.dt;
  cfg.scheme = parse_scheme(o.scheme);
  cfg.boundary = parse_boundary(o.boundary);
  cfg.n_q = o.nq;
  cfg.q0 = o.q0;
  cfg.v0 = o.v0;
  cfg.t_start = o.t_start;
  const FpeForm form = parse_form(o.form);
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(o.snapshots + 1, o.t_start, o.t_max).tail(o.snapshots);

  const FpeRun run = solve(p, form, mode, times, cfg, o.compare_analytic);
  json files = json::array();
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    std::ostringstream name;
    name << "snapshot_" << std::setw(3) << std::setfill('0') << k << ".csv";
    auto csv = out.open(name.str());
    write_csv(run.snapshots[k], csv);
    files.push_back(name.str());
  }
  json m = qbm::manifest(run, p);
  m["snapshot_files"] = files;
  out.write_json("fpe.json", m);
  manifest["fpe"] = {{"steps", run.stats.steps}, {"max_mass_drift", run.stats.max_mass_drift}};
  if (o.compare_analytic) manifest["fpe"]["linf_error"] = run.linf_error;
  if (c.plot) {
    std::ostringstream body;
    body << "set xlabel 'q'\nplot";
    for (std::size_t k = 0; k < files.size(); ++k) body << (k ? "," : "") << " '" << files[k].get<std::string>() << "' with lines";
    body << '\n';
    write_plot(out, "fpe.gp", body.str());
  }
  log << "solved " << to_string(form) << " form to t = " << o.t_max << " in " << run.stats.steps << " steps\n";
  if (o.compare_analytic) {
    for (std::size_t k = 0; k < run.linf_error.size(); ++k) {
      log << "  t = " << run.snapshots[k].t << "  L_inf/peak = " << run.linf_error[k] << '\n';
    }
  }
  return 0;
}

int cmd_sde(const Common& c, const SdeOpts& o, Outputs& out, json& manifest, std::ostream& log) {
  const PhysicalParams p = params_from(c);
  if (mode_from(c) != Mode::Classical) {
    throw Error(ErrorCode::InvalidArgument, "the SDE simulators are classical only; pass --classical");
  }
  if (o.n < 1 || !(o.t_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "--n must be >= 1 and --t-max > 0");
  SdeConfig cfg;
  cfg.n_paths = o.paths;
  cfg.dt = o.dt;
  cfg.seed = o.seed;
  cfg.threads = c.threads;
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(o.n + 1, 0.0, o.t_max).tail(o.n);

  Ensemble ens;
  if (o.model == "reduced") {
    ens = simulate_reduced(p, o.q0, times, cfg);
  } else if (o.model == "langevin") {
    const InitialVelocity v0 = o.v0 ? InitialVelocity::fixed(*o.v0) : InitialVelocity::maxwell();
    ens = simulate_langevin(p, o.q0, v0, times, cfg).position;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown --model '" + o.model + "'");
  }
  auto csv = out.open("sde.csv");
  write_csv(ens.stats, csv);
  if (o.dump) {
    auto bin = out.open("paths.bin", true);
    write_binary(ens.samples, bin);
  }
  json m = {{"model", o.model}, {"config", to_json(cfg)}, {"q0", o.q0}, {"times", o.n}, {"t_max", o.t_max}};
  m["v0"] = o.v0 ? json(*o.v0) : json("thermal");
  out.write_json("sde.json", m);
  manifest["sde"] = m;
  if (c.plot) {
    write_plot(out, "sde.gp",
               "set xlabel 't'\nplot 'sde.csv' using 1:2:4 with yerrorlines, '' using 1:3:5 with yerrorlines\n");
  }
  log << "simulated " << o.paths << " " << o.model << " paths\n";
  return 0;
}

int cmd_validate(const Common& c, const ValidateOpts& o, Outputs& out, json& manifest, std::ostream& log) {
  SuiteOptions so;
  so.params = params_from(c);
  so.q0 = o.q0;
  so.paths = o.paths;
  so.seed = o.seed;
  so.threads = c.threads;
  const ValidationReport report = run_suite(o.suite, so);
  out.write_json("validation.json", report.to_json());
  manifest["validation_passed"] = report.passed();
  for (const Check& k : report.checks) {
    log << (k.passed ? "pass  " : "FAIL  ") << k.name << " = " << k.measured << " (tol " << k.tolerance << ")\n";
  }
  return report.passed() ? 0 : 2;
}

// Values from a flat key = value file fill every option not given on the command line.
void apply_config(CLI::App& sub, const std::string& path) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::FileError& e) {
    throw Error(ErrorCode::InvalidArgument, e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw Error(ErrorCode::InvalidArgument, "unknown key '" + item.name + "' in " + path);
    if (opt->count() > 0) continue;
    for (const std::string& v : item.inputs) opt->add_result(v);
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorCode::InvalidArgument, item.name + ": " + e.what());
    }
  }
}

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--gamma", c.gamma, "friction rate")->capture_default_str();
  sub.add_option("--omega0-sq", c.omega0_sq, "potential curvature")->capture_default_str();
  sub.add_option("--mass", c.mass, "particle mass")->capture_default_str();
  sub.add_option("--temp", c.temp, "temperature")->capture_default_str();
  sub.add_option("--hbar", c.hbar, "Planck constant (quantum mode)");
  sub.add_flag("--classical", c.classical, "exact classical limit (hbar = 0)");
  sub.add_option("--units", c.units, "reduced (k_B = 1) or si")
      ->check(CLI::IsMember({"reduced", "si"}))
      ->capture_default_str();
  sub.add_option("--out", c.out, "output directory")->capture_default_str();
  sub.add_option("--threads", c.threads, "worker threads (default QBM_THREADS or all cores)");
  sub.add_flag("--plot", c.plot, "also write a gnuplot script");
  sub.add_option("--config", c.config, "flat key = value file; command-line flags take precedence");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum Brownian motion toolkit: FPE coefficients, solvers and simulators", "qbm"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  CoeffsOpts co;
  FpeOpts fo;
  SdeOpts so;
  ValidateOpts vo;

  auto* coeffs = app.add_subcommand("coeffs", "tabulate Omega, D1, sigma1, sigma_q and D on a time grid");
  add_common(*coeffs, common);
  coeffs->add_option("--t-max", co.t_max, "last grid time")->capture_default_str();
  coeffs->add_option("--n", co.n, "grid points")->capture_default_str();
  coeffs->add_option("--n-max", co.n_max, "Matsubara order (0: from --tol)")->capture_default_str();
  coeffs->add_option("--tol", co.tol, "bound on the truncated Matsubara remainder")->capture_default_str();
  coeffs->add_flag("--validate", co.validate, "run the sigma consistency checks");

  auto* fpe = app.add_subcommand("fpe", "solve the FPE on a grid");
  add_common(*fpe, common);
  fpe->add_option("--form", fo.form, "adelman or drift-velocity")->capture_default_str();
  fpe->add_option("--scheme", fo.scheme, "crank_nicolson or upwind_split")->capture_default_str();
  fpe->add_option("--boundary", fo.boundary, "zero-flux or absorbing")->capture_default_str();
  fpe->add_option("--q0", fo.q0)->capture_default_str();
  fpe->add_option("--v0", fo.v0, "initial velocity (drift-velocity form)")->capture_default_str();
  fpe->add_option("--t-max", fo.t_max)->capture_default_str();
  fpe->add_option("--t-start", fo.t_start, "start from the analytic density at this time")->capture_default_str();
  fpe->add_option("--snapshots", fo.snapshots, "equally spaced output times")->capture_default_str();
  fpe->add_option("--nq", fo.nq, "grid points")->capture_default_str();
  fpe->add_option("--dt", fo.dt)->capture_default_str();
  fpe->add_flag("--compare-analytic", fo.compare_analytic, "L_inf error against the analytic Gaussian");

  auto* sde = app.add_subcommand("sde", "simulate the reduced SDE or the Langevin equation");
  add_common(*sde, common);
  sde->add_option("--model", so.model, "reduced or langevin")->capture_default_str();
  sde->add_option("--paths", so.paths)->capture_default_str();
  sde->add_option("--seed", so.seed)->capture_default_str();
  sde->add_option("--dt", so.dt)->capture_default_str();
  sde->add_option("--q0", so.q0)->capture_default_str();
  sde->add_option("--v0", so.v0, "fixed initial velocity (Langevin; thermal when absent)");
  sde->add_option("--t-max", so.t_max)->capture_default_str();
  sde->add_option("--n", so.n, "output times")->capture_default_str();
  sde->add_flag("--dump", so.dump, "write every path to paths.bin");

  auto* validate = app.add_subcommand("validate", "run the cross-consistency suite");
  add_common(*validate, common);
  validate->add_option("--suite", vo.suite)->check(CLI::IsMember(suite_names()))->capture_default_str();
  validate->add_option("--paths", vo.paths)->capture_default_str();
  validate->add_option("--seed", vo.seed)->capture_default_str();
  validate->add_option("--q0", vo.q0)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  CLI::App* cmd = app.get_subcommands().front();
  if (!common.config.empty()) {
    try {
      apply_config(*cmd, common.config);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  if (common.threads <= 0) common.threads = default_threads();

  json manifest = {{"version", kVersion}, {"command", cmd->get_name()}, {"args", args}};
  std::optional<Outputs> outputs;
  int status = 0;
  try {
    outputs.emplace(common.out);
    manifest["params"] = to_json(params_from(common));
    if (cmd == coeffs) status = cmd_coeffs(common, co, *outputs, manifest, out);
    if (cmd == fpe) status = cmd_fpe(common, fo, *outputs, manifest, out);
    if (cmd == sde) status = cmd_sde(common, so, *outputs, manifest, out);
    if (cmd == validate) status = cmd_validate(common, vo, *outputs, manifest, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    manifest["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    status = is_input_error(e.code()) ? 1 : 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  if (outputs) {
    // effective configuration, re-readable with --config; unset optionals are dropped
    std::istringstream conf(cmd->config_to_str(true, false));
    auto os = outputs->open("run.conf");
    for (std::string line; std::getline(conf, line);) {
      if (line.find("=\"\"") == std::string::npos && line.rfind("config=", 0) != 0 &&
          line.rfind("threads=", 0) != 0) {
        os << line << '\n';
      }
    }
    manifest["exit_code"] = status;
    manifest["threads"] = common.threads;
    manifest["files"] = outputs->files();
    std::ofstream(outputs->dir() / "manifest.json") << manifest.dump(2) << '\n';
  }
  return status;
}

}  // namespace qbm::cli
