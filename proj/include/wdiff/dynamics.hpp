#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "wdiff/measure.hpp"
#include "wdiff/random.hpp"

namespace wdiff {

struct KernelStats {
  std::uint64_t proposals = 0;
  std::uint64_t out_of_domain = 0;
  std::uint64_t metropolis_rejections = 0;

  std::uint64_t accepted() const noexcept { return proposals - out_of_domain - metropolis_rejections; }
  double acceptance_rate() const noexcept {
    return proposals ? static_cast<double>(accepted()) / static_cast<double>(proposals) : 0.0;
  }
  KernelStats& operator+=(const KernelStats& o) noexcept {
    proposals += o.proposals;
    out_of_domain += o.out_of_domain;
    metropolis_rejections += o.metropolis_rejections;
    return *this;
  }
};

/// One step of the ball walk targeting q_N. With the Metropolis kernel the
/// proposal is x + eps*U, U uniform on the unit l-infinity ball; proposals
/// leaving the simplex are rejected, the rest accepted with probability
/// min(1, q_N(y)/q_N(x)).
ParticleConfig ball_walk_step(const ParticleConfig& x, const SimParams& params, RandomSource& rng,
                              KernelStats* stats = nullptr);

/// log of the density of the accepted-move part of the Metropolis kernel,
/// x -> y, with respect to Lebesgue measure. -infinity when y is unreachable.
double ball_walk_log_kernel(const ParticleConfig& x, const ParticleConfig& y,
                            const SimParams& params);

/// Drift (beta/N - 1)(1/(d_i + delta) - 1/(d_{i+1} + delta)) of each particle.
std::vector<double> sde_drift(const ParticleConfig& x, const SimParams& params);

/// Fold a real number into [0,1] by reflection at both ends.
double reflect_unit(double y) noexcept;

/// Euler step of the regularized Skorokhod system; reflection at 0 and 1 by
/// folding, ordering restored by sorting. Throws StepSizeError when some
/// |drift * dt| exceeds 1 or an unregularized drift hits a zero spacing.
ParticleConfig sde_step(const ParticleConfig& x, const SimParams& params, RandomSource& rng);
/// Same step with caller-provided standard normal increments.
ParticleConfig sde_step(const ParticleConfig& x, const SimParams& params,
                        std::span<const double> noise);

struct SimulationPath {
  std::vector<double> times;  ///< macroscopic times, starting at 0
  std::vector<ParticleConfig> states;
  SimParams params;
  KernelStats stats;  ///< ball-walk proposal statistics (empty for the SDE)
};

/// Microscopic steps per recording interval: floor(N r / eps^2) ball-walk
/// steps, or ceil(N r / dt) Euler steps.
std::uint64_t steps_per_record(const SimParams& params, double record_every);

/// Records at macroscopic times k * record_every up to params.horizon.
SimulationPath simulate_path(const ParticleConfig& x0, const SimParams& params,
                             double record_every, RandomSource& rng);

/// A draw from q_N; its iota-embedding is the N-grid marginal of the
/// stationary law of the limit.
ParticleConfig stationary_start(const SimParams& params, RandomSource& rng);

enum class StartMode { Stationary, Equidistant };

/// Independent replicas, replica r driven by RandomSource(params.seed, r).
/// The result is ordered by replica index and independent of `jobs`.
std::vector<SimulationPath> simulate_replicas(const SimParams& params, double record_every,
                                              std::size_t replicas, StartMode start,
                                              unsigned jobs = 1);

/// CSV: one comment line with parameters, header "time,x1,...", one row per state.
void write_path_csv(std::ostream& out, const SimulationPath& path);
SimulationPath read_path_csv(std::istream& in, const SimParams& params);

/// "# N=... beta=... ..." description of the parameter set.
std::string describe(const SimParams& params);

}  // namespace wdiff
