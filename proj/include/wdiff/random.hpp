#pragma once

#include <cstdint>
#include <random>

namespace wdiff {

/// Seeded pseudo-random stream. One instance per replica or sample block;
/// never shared between threads.
class RandomSource {
 public:
  using engine_type = std::mt19937_64;

  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent child stream keyed by `stream`; does not advance this one.
  RandomSource derive(std::uint64_t stream) const;

  /// Uniform on [0, 1).
  double uniform() { return unif_(engine_); }
  /// Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - unif_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(engine_); }
  double normal() { return normal_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  /// log of a Gamma(shape, 1) variate. Stays finite for very small shapes,
  /// where the variate itself would underflow.
  double log_gamma(double shape);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  engine_type engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer, used to decorrelate (seed, stream) pairs.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace wdiff
