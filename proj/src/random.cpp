#include "wdiff/random.hpp"

#include <cmath>

namespace wdiff {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = mix64(seed);
  const std::uint64_t b = mix64(a ^ mix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

RandomSource RandomSource::derive(std::uint64_t stream) const {
  return RandomSource(mix64(seed_ ^ mix64(stream_)), stream);
}

double RandomSource::log_gamma(double shape) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(engine_));
  }
  // G_a = G_{a+1} * U^{1/a}
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  const double lg = std::log(g(engine_));
  return lg + std::log(uniform_open_low()) / shape;
}

}  // namespace wdiff
