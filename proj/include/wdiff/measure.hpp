#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wdiff/random.hpp"

namespace wdiff {

/// Ordered positions 0 <= x^1 <= ... <= x^{N-1} <= 1 of N-1 particles, with
/// implicit endpoints x^0 = 0 and x^N = 1.
class ParticleConfig {
 public:
  /// N = 1: no interior particles.
  ParticleConfig() = default;
  explicit ParticleConfig(std::vector<double> positions);

  static ParticleConfig equidistant(std::size_t N);

  std::size_t n_particles() const noexcept { return positions_.size(); }
  std::size_t N() const noexcept { return positions_.size() + 1; }
  std::span<const double> positions() const noexcept { return positions_; }

  /// x^i for i in 0..N, including the fixed endpoints.
  double x(std::size_t i) const noexcept {
    if (i == 0) return 0.0;
    if (i > positions_.size()) return 1.0;
    return positions_[i - 1];
  }
  /// x^i - x^{i-1} for i in 1..N.
  double spacing(std::size_t i) const noexcept { return x(i) - x(i - 1); }

  bool operator==(const ParticleConfig&) const = default;

 private:
  std::vector<double> positions_;
};

/// Throws InvalidArgument unless `positions` is a point of the ordered simplex.
void check_simplex(std::span<const double> positions);

enum class Scheme { BallWalk, RegularizedSde };

/// Transition kernel used by the ball walk.
enum class BallWalkKernel {
  Metropolis,      ///< proposal x + eps*U, Metropolis acceptance against q_N
  /// q_N conditioned on the eps-box around x, by rejection from q_N. This
  /// kernel is reversible for q_N(B_eps(x)) q_N(dx) / Z rather than q_N.
  ExactRejection,
};

struct SimParams {
  std::size_t N = 2;
  double beta = 1.0;
  double epsilon = 0.05;
  /// Microscopic Euler step; epsilon^2 gives both schemes the same macroscopic
  /// time per step (epsilon^2 / N).
  double dt = 0.0025;
  double delta_reg = 1e-6;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::BallWalk;
  BallWalkKernel kernel = BallWalkKernel::Metropolis;
  /// Cap on proposals per step for BallWalkKernel::ExactRejection.
  std::size_t max_rejection_tries = 10'000'000;

  /// Dirichlet parameter beta / N of each spacing.
  double alpha() const noexcept { return beta / static_cast<double>(N); }
  void validate() const;
};

std::string to_string(Scheme s);
Scheme parse_scheme(std::string_view s);

struct QuantilePiece {
  double length;  ///< Lebesgue length of the interval
  double value;   ///< value of g on the interval
};

/// Right-continuous nondecreasing step function g : [0,1) -> [0,1].
///
/// Stored as consecutive (length, value) pieces covering [0,1); breakpoints
/// are the running sums of lengths. Storing lengths rather than breakpoints
/// makes the maps to and from EmpiricalMeasure exact in floating point.
class QuantileStep {
 public:
  explicit QuantileStep(std::vector<QuantilePiece> pieces);

  static QuantileStep constant(double c);
  /// Breakpoints must start at 0 and increase strictly; one value per breakpoint.
  static QuantileStep from_breakpoints(std::span<const double> breakpoints,
                                       std::span<const double> values);

  std::span<const QuantilePiece> pieces() const noexcept { return pieces_; }
  std::size_t size() const noexcept { return pieces_.size(); }
  /// Left endpoints t_0 = 0 < t_1 < ...; one per piece.
  std::vector<double> breakpoints() const;
  std::vector<double> values() const;

  /// g(t) for t in [0,1); t >= 1 returns the last value.
  double operator()(double t) const;

  /// Adjacent pieces with equal values merged.
  QuantileStep canonical() const;

  /// Function equality (compares canonical forms exactly).
  bool operator==(const QuantileStep& other) const;

 private:
  std::vector<QuantilePiece> pieces_;
};

struct Atom {
  double position;
  double weight;
  bool operator==(const Atom&) const = default;
};

/// Finitely many atoms on [0,1] with strictly increasing positions and
/// weights summing to one.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(std::vector<Atom> atoms);

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// sum_k w_k fn(a_k)
  template <class F>
  double integrate(F&& fn) const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight * fn(a.position);
    return s;
  }

  bool operator==(const EmpiricalMeasure&) const = default;

 private:
  std::vector<Atom> atoms_;
};

struct Interval {
  double left;
  double right;
  double length() const noexcept { return right - left; }
  bool operator==(const Interval&) const = default;
};

/// Draw from q_N: normalized Gamma(beta/N) spacings.
ParticleConfig sample_config(const SimParams& params, RandomSource& rng);

/// Positions from log-spacings (unnormalized); used by sample_config.
/// Positions in the upper half are formed as 1 - (suffix sum) so that values
/// within a few ulps of 1 are rounded correctly.
std::vector<double> positions_from_log_spacings(std::span<const double> log_spacings);

/// log of the q_N density. Throws DegenerateSpacing on a zero spacing.
double log_density_qn(const ParticleConfig& x, const SimParams& params);
double log_density_qn(std::span<const double> positions, double beta);

/// The staircase iota(x) = sum_i x^i 1_{[i/N,(i+1)/N)}.
QuantileStep embed_quantile(const ParticleConfig& x);

/// rho: the image measure of Lebesgue measure under g.
EmpiricalMeasure measure_of_quantile(const QuantileStep& g);

/// kappa: the right-continuous quantile function of mu.
QuantileStep quantile_of_measure(const EmpiricalMeasure& mu);

/// mu^N (weights 1/(N-1)) or, with `modified`, nu^N = (N-1)/N mu^N + delta_0/N.
EmpiricalMeasure empirical_measure(const ParticleConfig& x, bool modified);

/// Connected components of [0,1] minus the support, left to right, including
/// the boundary gaps (0, a_first) and (a_last, 1) when nonempty.
std::vector<Interval> gaps(const EmpiricalMeasure& mu);

/// L^2(dx) distance of the quantile functions.
double wasserstein2(const QuantileStep& g1, const QuantileStep& g2);

/// "x1,x2,..." with round-trip precision; empty string for N = 1.
std::string format_config(const ParticleConfig& x);
ParticleConfig parse_config(std::string_view line);
/// "t0:v0;t1:v1;..." with round-trip precision.
std::string format_quantile(const QuantileStep& g);
QuantileStep parse_quantile(std::string_view text);

/// Shortest decimal representation that round-trips.
std::string format_double(double v);

}  // namespace wdiff
