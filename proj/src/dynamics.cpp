#include "wdiff/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "wdiff/errors.hpp"
#include "wdiff/parallel.hpp"

namespace wdiff {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// sum_i log(x^i - x^{i-1}), -inf on a zero spacing.
double sum_log_spacings(std::span<const double> pos) {
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i <= pos.size(); ++i) {
    const double next = i < pos.size() ? pos[i] : 1.0;
    const double d = next - prev;
    if (!(d > 0.0)) return kNegInf;
    acc += std::log(d);
    prev = next;
  }
  return acc;
}

bool in_simplex(std::span<const double> y) {
  double prev = 0.0;
  for (const double v : y) {
    if (!(v >= prev)) return false;
    prev = v;
  }
  return prev <= 1.0;
}

/// Mutable chain state for the ball walk; caches the log-spacing sum of x.
struct BallWalkState {
  std::vector<double> x;
  std::vector<double> y;
  double sum_log_x;

  explicit BallWalkState(std::span<const double> pos)
      : x(pos.begin(), pos.end()), y(pos.size()), sum_log_x(sum_log_spacings(pos)) {}

  void step(const SimParams& params, RandomSource& rng, KernelStats& stats) {
    if (x.empty()) return;
    ++stats.proposals;
    if (params.kernel == BallWalkKernel::ExactRejection) {
      step_exact(params, rng, stats);
      return;
    }
    const double eps = params.epsilon;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + eps * (2.0 * rng.uniform() - 1.0);
    if (!in_simplex(y)) {
      ++stats.out_of_domain;
      return;
    }
    const double alpha = params.alpha();
    if (alpha == 1.0) {
      x.swap(y);
      sum_log_x = sum_log_spacings(x);
      return;
    }
    const double sum_log_y = sum_log_spacings(y);
    const double log_ratio = (alpha - 1.0) * (sum_log_y - sum_log_x);
    if (log_ratio >= 0.0 || std::log(rng.uniform_open_low()) < log_ratio) {
      x.swap(y);
      sum_log_x = sum_log_y;
    } else {
      ++stats.metropolis_rejections;
    }
  }

  void step_exact(const SimParams& params, RandomSource& rng, KernelStats& stats) {
    for (std::size_t attempt = 0; attempt < params.max_rejection_tries; ++attempt) {
      const auto cand = sample_config(params, rng);
      const auto c = cand.positions();
      bool inside = true;
      for (std::size_t i = 0; i < x.size() && inside; ++i) {
        inside = std::abs(c[i] - x[i]) <= params.epsilon;
      }
      if (inside) {
        std::copy(c.begin(), c.end(), x.begin());
        sum_log_x = sum_log_spacings(x);
        return;
      }
      ++stats.out_of_domain;
    }
    throw SamplingError("exact ball kernel: no q_N draw landed in the eps-box after " +
                        std::to_string(params.max_rejection_tries) + " tries");
  }
};

void compute_drift(std::span<const double> x, const SimParams& params, std::span<double> drift) {
  const double c = params.alpha() - 1.0;
  const double delta = params.delta_reg;
  const std::size_t n = x.size();
  double left = x.empty() ? 1.0 : x[0];  // d_1
  for (std::size_t i = 0; i < n; ++i) {
    const double right = (i + 1 < n ? x[i + 1] : 1.0) - x[i];  // d_{i+1}
    const double a = left + delta;
    const double b = right + delta;
    if (c != 0.0 && (!(a > 0.0) || !(b > 0.0))) {
      throw StepSizeError("zero spacing with delta_reg = 0 makes the drift infinite; "
                          "use delta_reg > 0 or a smaller dt");
    }
    drift[i] = c == 0.0 ? 0.0 : c * (1.0 / a - 1.0 / b);
    left = right;
  }
}

/// Euler step in place; `drift` is scratch of the same size.
template <class Noise>
void sde_step_inplace(std::vector<double>& x, std::vector<double>& drift, const SimParams& params,
                      Noise&& noise) {
  compute_drift(x, params, drift);
  const double dt = params.dt;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(drift[i] * dt) > 1.0) {
      throw StepSizeError("Euler step too large: |drift*dt| = " +
                          format_double(std::abs(drift[i] * dt)) + " > 1 at particle " +
                          std::to_string(i + 1) + "; reduce dt or increase delta_reg");
    }
  }
  const double sigma = std::sqrt(2.0 * dt);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = reflect_unit(x[i] + drift[i] * dt + sigma * noise(i));
  }
  // Nearly sorted after a small step: insertion sort is linear here.
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double v = x[i];
    std::size_t j = i;
    for (; j > 0 && x[j - 1] > v; --j) x[j] = x[j - 1];
    x[j] = v;
  }
}

}  // namespace

ParticleConfig ball_walk_step(const ParticleConfig& x, const SimParams& params, RandomSource& rng,
                              KernelStats* stats) {
  if (x.N() != params.N) throw InvalidArgument("config size does not match params.N");
  BallWalkState state(x.positions());
  KernelStats local;
  state.step(params, rng, local);
  if (stats) *stats += local;
  return ParticleConfig(std::move(state.x));
}

double ball_walk_log_kernel(const ParticleConfig& x, const ParticleConfig& y,
                            const SimParams& params) {
  const auto px = x.positions();
  const auto py = y.positions();
  const std::size_t n = px.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(py[i] - px[i]) > params.epsilon) return kNegInf;
  }
  const double log_proposal = -static_cast<double>(n) * std::log(2.0 * params.epsilon);
  const double log_ratio =
      log_density_qn(py, params.beta) - log_density_qn(px, params.beta);
  return log_proposal + std::min(0.0, log_ratio);
}

std::vector<double> sde_drift(const ParticleConfig& x, const SimParams& params) {
  std::vector<double> d(x.n_particles());
  compute_drift(x.positions(), params, d);
  return d;
}

double reflect_unit(double y) noexcept {
  if (y >= 0.0 && y <= 1.0) return y;
  double m = std::fmod(std::abs(y), 2.0);
  return m <= 1.0 ? m : 2.0 - m;
}

ParticleConfig sde_step(const ParticleConfig& x, const SimParams& params, RandomSource& rng) {
  std::vector<double> pos(x.positions().begin(), x.positions().end());
  std::vector<double> drift(pos.size());
  sde_step_inplace(pos, drift, params, [&](std::size_t) { return rng.normal(); });
  return ParticleConfig(std::move(pos));
}

ParticleConfig sde_step(const ParticleConfig& x, const SimParams& params,
                        std::span<const double> noise) {
  if (noise.size() != x.n_particles()) throw InvalidArgument("noise size mismatch");
  std::vector<double> pos(x.positions().begin(), x.positions().end());
  std::vector<double> drift(pos.size());
  sde_step_inplace(pos, drift, params, [&](std::size_t i) { return noise[i]; });
  return ParticleConfig(std::move(pos));
}

std::uint64_t steps_per_record(const SimParams& params, double record_every) {
  const double micro = static_cast<double>(params.N) * record_every;
  if (params.scheme == Scheme::BallWalk) {
    return static_cast<std::uint64_t>(
        std::floor(micro / (params.epsilon * params.epsilon) * (1.0 + 1e-12)));
  }
  return static_cast<std::uint64_t>(std::ceil(micro / params.dt * (1.0 - 1e-12)));
}

SimulationPath simulate_path(const ParticleConfig& x0, const SimParams& params,
                             double record_every, RandomSource& rng) {
  params.validate();
  if (x0.N() != params.N) throw InvalidArgument("x0 size does not match params.N");
  SimulationPath path;
  path.params = params;
  path.times.push_back(0.0);
  path.states.push_back(x0);
  if (params.horizon == 0.0) return path;
  if (!(record_every > 0.0) || record_every > params.horizon * (1.0 + 1e-12)) {
    throw InvalidArgument("record_every must lie in (0, horizon]");
  }
  const auto records =
      static_cast<std::size_t>(std::floor(params.horizon / record_every * (1.0 + 1e-12)));
  const std::uint64_t steps = steps_per_record(params, record_every);
  path.times.reserve(records + 1);
  path.states.reserve(records + 1);

  if (params.scheme == Scheme::BallWalk) {
    BallWalkState state(x0.positions());
    for (std::size_t k = 1; k <= records; ++k) {
      for (std::uint64_t s = 0; s < steps; ++s) state.step(params, rng, path.stats);
      path.times.push_back(static_cast<double>(k) * record_every);
      path.states.emplace_back(state.x);
    }
  } else {
    std::vector<double> x(x0.positions().begin(), x0.positions().end());
    std::vector<double> drift(x.size());
    auto noise = [&](std::size_t) { return rng.normal(); };
    for (std::size_t k = 1; k <= records; ++k) {
      for (std::uint64_t s = 0; s < steps; ++s) {
        try {
          sde_step_inplace(x, drift, params, noise);
        } catch (const StepSizeError& e) {
          const double t = (static_cast<double>(k - 1) * static_cast<double>(steps) +
                            static_cast<double>(s)) *
                           params.dt / static_cast<double>(params.N);
          throw StepSizeError(std::string(e.what()) + " (macroscopic time " + format_double(t) + ")",
                              t);
        }
      }
      path.times.push_back(static_cast<double>(k) * record_every);
      path.states.emplace_back(x);
    }
  }
  return path;
}

ParticleConfig stationary_start(const SimParams& params, RandomSource& rng) {
  return sample_config(params, rng);
}

std::vector<SimulationPath> simulate_replicas(const SimParams& params, double record_every,
                                              std::size_t replicas, StartMode start,
                                              unsigned jobs) {
  std::vector<SimulationPath> out(replicas);
  // Failures are kept per replica so the reported one is the lowest index
  // regardless of scheduling.
  std::vector<std::optional<StepSizeError>> failed(replicas);
  parallel_for(replicas, jobs, [&](std::size_t r) {
    RandomSource rng(params.seed, r);
    const auto x0 = start == StartMode::Stationary ? stationary_start(params, rng)
                                                   : ParticleConfig::equidistant(params.N);
    try {
      out[r] = simulate_path(x0, params, record_every, rng);
    } catch (const StepSizeError& e) {
      failed[r].emplace(e);
    }
  });
  for (std::size_t r = 0; r < replicas; ++r) {
    if (failed[r]) throw StepSizeError("replica " + std::to_string(r) + ": " + failed[r]->what(), failed[r]->time());
  }
  return out;
}

std::string describe(const SimParams& p) {
  std::ostringstream os;
  os << "N=" << p.N << " beta=" << format_double(p.beta) << " epsilon=" << format_double(p.epsilon)
     << " dt=" << format_double(p.dt) << " delta_reg=" << format_double(p.delta_reg)
     << " horizon=" << format_double(p.horizon) << " seed=" << p.seed
     << " scheme=" << to_string(p.scheme)
     << " kernel=" << (p.kernel == BallWalkKernel::Metropolis ? "Metropolis" : "ExactRejection");
  return os.str();
}

void write_path_csv(std::ostream& out, const SimulationPath& path) {
  out << "# " << describe(path.params) << '\n';
  out << "time";
  for (std::size_t i = 1; i < path.params.N; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    out << format_double(path.times[k]);
    for (const double v : path.states[k].positions()) out << ',' << format_double(v);
    out << '\n';
  }
}

SimulationPath read_path_csv(std::istream& in, const SimParams& params) {
  SimulationPath path;
  path.params = params;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    const std::string t = line.substr(0, comma);
    path.times.push_back(std::stod(t));
    path.states.push_back(comma == std::string::npos ? ParticleConfig()
                                                     : parse_config(line.substr(comma + 1)));
    if (path.states.back().N() != params.N) throw InvalidArgument("path row has wrong width");
  }
  return path;
}

}  // namespace wdiff
