#include "qbm/sde.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>
#include <vector>

#include "qbm/coefficients.hpp"
#include "qbm/errors.hpp"
#include "qbm/response.hpp"

namespace qbm {

// ---------------------------------------------------------------------------

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

PathRng::PathRng(std::uint64_t seed, std::uint32_t stream, std::uint64_t path)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0u, stream, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)} {}

void PathRng::refill() {
  block_ = philox4x32_10(counter_, key_);
  ++counter_[0];
  used_ = 0;
}

double PathRng::uniform() {
  if (used_ > 2) refill();
  const std::uint64_t a = block_[used_] >> 5;  // 27 bits
  const std::uint64_t b = block_[used_ + 1] >> 6;  // 26 bits
  used_ += 2;
  return (static_cast<double>((a << 26) | b) + 0.5) * 0x1p-53;
}

double PathRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double th = 2.0 * M_PI * uniform();
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

// ---------------------------------------------------------------------------

namespace {

// Steps of length <= dt that land exactly on every output time.
struct Schedule {
  std::vector<double> start;
  std::vector<double> h;
  std::vector<long> steps_at;  // steps completed when output k is recorded
};

Schedule make_schedule(const Eigen::VectorXd& times, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  Schedule s;
  double t = 0.0;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const double span = times(k) - t;
    if (span < 0.0 || (k > 0 && span == 0.0)) throw Error(ErrorCode::InvalidArgument, "output times must increase from 0");
    if (span > 0.0) {
      const long n = std::max(1L, static_cast<long>(std::ceil(span / dt * (1.0 - 1e-12))));
      const double h = span / n;
      for (long i = 0; i < n; ++i) {
        s.start.push_back(t + i * h);
        s.h.push_back(h);
      }
    }
    t = times(k);
    s.steps_at.push_back(static_cast<long>(s.h.size()));
  }
  return s;
}

template <typename Fn>
void parallel_paths(long n_paths, int threads, Fn&& body) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::min<long>(n_paths, 1024))));
  if (threads == 1) {
    body(0L, n_paths);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(threads);
  const long block = (n_paths + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const long lo = w * block, hi = std::min(n_paths, lo + block);
    pool.emplace_back([&, w, lo, hi] {
      try {
        if (lo < hi) body(lo, hi);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

void require_paths(const SdeConfig& cfg) {
  if (cfg.n_paths < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 paths");
}

}  // namespace

double pairwise_sum(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  if (n <= 16) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += x(i);
    return s;
  }
  const Eigen::Index half = n / 2;
  return pairwise_sum(x.head(half)) + pairwise_sum(x.tail(n - half));
}

EnsembleStats summarize(const Eigen::MatrixXd& samples, const Eigen::VectorXd& t, std::uint64_t seed) {
  const Eigen::Index n = samples.rows(), m = samples.cols();
  if (t.size() != m) throw Error(ErrorCode::GridMismatch, "sample columns do not match the time grid");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 paths");
  EnsembleStats s;
  s.t = t;
  s.n_paths = n;
  s.seed = seed;
  s.mean.resize(m);
  s.variance.resize(m);
  s.se_mean.resize(m);
  s.se_variance.resize(m);
  const double dn = static_cast<double>(n);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double mean = pairwise_sum(samples.col(k)) / dn;
    const Eigen::VectorXd d2 = (samples.col(k).array() - mean).square().matrix();
    const double m2 = pairwise_sum(d2) / dn;
    const double m4 = pairwise_sum(d2.array().square().matrix()) / dn;
    const double var = m2 * dn / (dn - 1.0);
    s.mean(k) = mean;
    s.variance(k) = var;
    s.se_mean(k) = std::sqrt(var / dn);
    s.se_variance(k) = std::sqrt(std::max(m4 - m2 * m2, 0.0) / dn);
  }
  return s;
}

Ensemble simulate_reduced(const SdeCoefficientFn& coefficients, double q0, const Eigen::VectorXd& times,
                          const SdeConfig& cfg) {
  require_paths(cfg);
  const Schedule sch = make_schedule(times, cfg.dt);
  const std::size_t n_steps = sch.h.size();
  std::vector<double> a(n_steps), b(n_steps), c(n_steps);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const double h = sch.h[s];
    const FpeCoefficients co = coefficients(sch.start[s] + 0.5 * h);
    if (!std::isfinite(co.omega) || !std::isfinite(co.vbar) || !std::isfinite(co.diffusion) || co.diffusion < 0.0) {
      throw Error(ErrorCode::NonFiniteCoefficient,
                  "coefficients at t = " + std::to_string(sch.start[s] + 0.5 * h) + " (D = " + std::to_string(co.diffusion) + ")");
    }
    a[s] = 1.0 + co.omega * h;
    b[s] = co.vbar * h;
    c[s] = std::sqrt(co.diffusion * h);
  }

  Ensemble out;
  out.samples.resize(cfg.n_paths, times.size());
  parallel_paths(cfg.n_paths, cfg.threads, [&](long lo, long hi) {
    for (long path = lo; path < hi; ++path) {
      PathRng rng(cfg.seed, static_cast<std::uint32_t>(Stream::Reduced), static_cast<std::uint64_t>(path));
      double q = q0;
      std::size_t s = 0;
      for (Eigen::Index k = 0; k < times.size(); ++k) {
        const auto stop = static_cast<std::size_t>(sch.steps_at[k]);
        for (; s < stop; ++s) q = a[s] * q + b[s] + c[s] * rng.normal();
        out.samples(path, k) = q;
      }
    }
  });
  if (!out.samples.allFinite()) throw Error(ErrorCode::NonFiniteState, "reduced SDE produced non-finite positions");
  out.stats = summarize(out.samples, times, cfg.seed);
  return out;
}

SdeCoefficientFn reduced_coefficients(const PhysicalParams& p) {
  return [p](double t) { return FpeCoefficients{omega_drift(p, t), 0.0, d_classical(p, t)}; };
}

Ensemble simulate_reduced(const PhysicalParams& p, double q0, const Eigen::VectorXd& times, const SdeConfig& cfg) {
  if (times.size() == 0) throw Error(ErrorCode::InvalidArgument, "no output times");
  const auto zeros = chi_q_zeros(p, 0.0, times.maxCoeff());
  if (!zeros.empty()) {
    throw Error(ErrorCode::PoleWindow, "chi_q vanishes at t = " + std::to_string(zeros.front()) +
                                           "; the reduced SDE is defined only before it");
  }
  return simulate_reduced(reduced_coefficients(p), q0, times, cfg);
}

MomentPath euler_maruyama_moments(const SdeCoefficientFn& coefficients, double q0, const Eigen::VectorXd& times,
                                  double dt) {
  const Schedule sch = make_schedule(times, dt);
  MomentPath out{Eigen::VectorXd(times.size()), Eigen::VectorXd(times.size())};
  double m = q0, v = 0.0;
  std::size_t s = 0;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    for (; s < static_cast<std::size_t>(sch.steps_at[k]); ++s) {
      const double h = sch.h[s];
      const FpeCoefficients co = coefficients(sch.start[s] + 0.5 * h);
      const double a = 1.0 + co.omega * h;
      m = a * m + co.vbar * h;
      v = a * a * v + co.diffusion * h;
    }
    out.mean(k) = m;
    out.variance(k) = v;
  }
  return out;
}

LangevinEnsemble simulate_langevin(const PhysicalParams& p, double q0, InitialVelocity v0, const Eigen::VectorXd& times,
                                   const SdeConfig& cfg) {
  require_paths(cfg);
  const Schedule sch = make_schedule(times, cfg.dt);
  const double rate = p.restoring_rate();
  const double vel_sd = std::sqrt(p.velocity_variance());

  LangevinEnsemble out;
  out.position.samples.resize(cfg.n_paths, times.size());
  out.velocity.resize(cfg.n_paths, times.size());
  parallel_paths(cfg.n_paths, cfg.threads, [&](long lo, long hi) {
    double h_cached = -1.0, decay = 0.0, kick = 0.0;
    for (long path = lo; path < hi; ++path) {
      PathRng rng(cfg.seed, static_cast<std::uint32_t>(Stream::Langevin), static_cast<std::uint64_t>(path));
      double q = q0;
      double v = v0.thermal ? vel_sd * rng.normal() : v0.v0;
      std::size_t s = 0;
      for (Eigen::Index k = 0; k < times.size(); ++k) {
        for (; s < static_cast<std::size_t>(sch.steps_at[k]); ++s) {
          const double h = sch.h[s];
          if (h != h_cached) {
            h_cached = h;
            decay = std::exp(-p.gamma * h);
            kick = vel_sd * std::sqrt(-std::expm1(-2.0 * p.gamma * h));
          }
          v -= 0.5 * h * rate * q;                // B
          q += 0.5 * h * v;                       // A
          v = decay * v + kick * rng.normal();    // O
          q += 0.5 * h * v;                       // A
          v -= 0.5 * h * rate * q;                // B
        }
        out.position.samples(path, k) = q;
        out.velocity(path, k) = v;
      }
      if (!std::isfinite(q) || !std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteState, "Langevin path " + std::to_string(path) + " diverged; reduce dt");
      }
    }
  });
  out.position.stats = summarize(out.position.samples, times, cfg.seed);
  return out;
}

// ---------------------------------------------------------------------------

double ks_statistic(Eigen::VectorXd sample, const std::function<double(double)>& cdf) {
  std::sort(sample.data(), sample.data() + sample.size());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (Eigen::Index i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample(i));
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_statistic(Eigen::VectorXd a, Eigen::VectorXd b) {
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  Eigen::Index i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a(i), b(j));
    while (i < a.size() && a(i) == x) ++i;
    while (j < b.size() && b(j) == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double ks_critical(long n, long m, double alpha) {
  if (n < 1 || m < 0 || !(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "bad KS arguments");
  const double n_eff = m == 0 ? static_cast<double>(n) : static_cast<double>(n) * m / static_cast<double>(n + m);
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(n_eff);
}

ValidationReport equivalence_report(const EnsembleStats& a, const EnsembleStats& b, const GaussianDensity& analytic,
                                    double z_max) {
  if (a.t.size() != b.t.size() || (a.t - b.t).cwiseAbs().maxCoeff() > 0.0) {
    throw Error(ErrorCode::GridMismatch, "ensembles use different time grids");
  }
  ValidationReport r;
  r.title = "ensemble equivalence";
  auto z = [](double x, double y, double se) {
    if (se == 0.0) return x == y ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(x - y) / se;
  };
  for (Eigen::Index k = 0; k < a.t.size(); ++k) {
    const double t = a.t(k);
    const std::string at = " t=" + std::to_string(t);
    const double m = analytic.mean(t), v = analytic.variance(t);
    r.add("mean A-B" + at, z(a.mean(k), b.mean(k), std::hypot(a.se_mean(k), b.se_mean(k))), z_max);
    r.add("variance A-B" + at, z(a.variance(k), b.variance(k), std::hypot(a.se_variance(k), b.se_variance(k))), z_max);
    r.add("mean A-exact" + at, z(a.mean(k), m, a.se_mean(k)), z_max);
    r.add("variance A-exact" + at, z(a.variance(k), v, a.se_variance(k)), z_max);
    r.add("mean B-exact" + at, z(b.mean(k), m, b.se_mean(k)), z_max);
    r.add("variance B-exact" + at, z(b.variance(k), v, b.se_variance(k)), z_max);
  }
  return r;
}

void write_csv(const EnsembleStats& s, std::ostream& os) {
  os.precision(17);
  os << "t,mean,var,se_mean,se_var\n";
  for (Eigen::Index k = 0; k < s.t.size(); ++k) {
    os << s.t(k) << ',' << s.mean(k) << ',' << s.variance(k) << ',' << s.se_mean(k) << ',' << s.se_variance(k) << '\n';
  }
}

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error(ErrorCode::InvalidArgument, "truncated path dump");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_binary(const Eigen::MatrixXd& samples, std::ostream& os) {
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(samples.rows()));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(samples.cols()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index k = 0; k < samples.cols(); ++k) put_le<double>(os, samples(i, k));
  }
}

Eigen::MatrixXd read_binary(std::istream& is) {
  const auto rows = get_le<std::uint64_t>(is);
  const auto cols = get_le<std::uint64_t>(is);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = get_le<double>(is);
  }
  return m;
}

nlohmann::json to_json(const SdeConfig& cfg) {
  return {{"n_paths", cfg.n_paths}, {"dt", cfg.dt}, {"seed", cfg.seed}, {"threads", cfg.threads}};
}

}  // namespace qbm
