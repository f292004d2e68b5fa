#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wdiff/diagnostics.hpp"
#include "wdiff/errors.hpp"

using namespace wdiff;
using std::numbers::pi;

namespace {

SimParams qn(std::size_t N, double beta) {
  SimParams p;
  p.N = N;
  p.beta = beta;
  return p;
}

std::vector<ParticleConfig> draws(const SimParams& p, std::size_t M, std::uint64_t seed) {
  RandomSource r(seed);
  std::vector<ParticleConfig> out;
  for (std::size_t k = 0; k < M; ++k) out.push_back(sample_config(p, r));
  return out;
}

SimulationPath short_path(std::size_t N, double beta, double horizon, std::uint64_t seed) {
  SimParams p = qn(N, beta);
  p.scheme = Scheme::RegularizedSde;
  p.dt = 1e-5;
  p.delta_reg = std::sqrt(p.dt);
  p.horizon = horizon;
  RandomSource r(seed);
  return simulate_path(stationary_start(p, r), p, horizon > 0 ? horizon / 20 : 1.0, r);
}

}  // namespace

TEST_CASE("drift_functional examples") {
  CHECK(drift_functional(EmpiricalMeasure({{0.3, 0.5}, {0.6, 0.5}}), constant_function(2.0), 1.0) == 0.0);
  CHECK(std::abs(drift_functional(EmpiricalMeasure({{0.5, 1.0}}), cosine(1), 1.3)) <= 1e-12);
  // Worked by hand: the three gap terms give -4 pi^2 + 8 pi, the boundary term 4 pi^2.
  const EmpiricalMeasure quarter({{0.25, 0.5}, {0.75, 0.5}});
  for (const double beta : {0.5, 1.0, 4.0}) {
    CHECK(drift_functional(quarter, cosine(2), beta) == doctest::Approx(8.0 * pi).epsilon(1e-13));
  }
  CHECK(8.0 * pi == doctest::Approx(25.1327412287183459).epsilon(1e-15));
}

TEST_CASE("property: drift depends only on support and weights") {
  RandomSource r(1);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> x(6);
    for (auto& v : x) v = r.uniform();
    x[2] = x[1];
    x[4] = x[3];
    std::sort(x.begin(), x.end());
    const auto merged = empirical_measure(ParticleConfig(x), true);
    std::vector<Atom> atoms{{0.0, 1.0 / 7.0}};
    for (const double v : x) {
      if (atoms.back().position == v) {
        atoms.back().weight += 1.0 / 7.0;
      } else {
        atoms.push_back({v, 1.0 / 7.0});
      }
    }
    CHECK(drift_functional(merged, cosine(3), 2.0) ==
          doctest::Approx(drift_functional(EmpiricalMeasure(atoms), cosine(3), 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("property: drift of grid measures tends to the full-support limit") {
  // Atoms at j/k with equal weights: the gap terms are O(k^-3) each, so the
  // drift tends to beta int f'' - (f''(0) + f''(1)) / 2.
  const auto f = exponential(1.0);
  const double beta = 1.5;
  const double limit = beta * (std::exp(1.0) - 1.0) - (1.0 + std::exp(1.0)) / 2.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 4; k <= 1024; k *= 2) {
    std::vector<Atom> atoms;
    for (std::size_t j = 0; j <= k; ++j) atoms.push_back({double(j) / k, 1.0 / (k + 1)});
    const double err = std::abs(drift_functional(EmpiricalMeasure(atoms), f, beta) - limit);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("martingale and quadratic variation basics") {
  const auto path = short_path(8, 1.0, 0.01, 2);
  for (const double m : martingale_series(path, constant_function(0.7), 1.0)) CHECK(m == 0.0);
  const auto q0 = qv_check(path, constant_function(0.7), 1.0);
  CHECK(q0.realized == 0.0);
  CHECK(q0.predicted == 0.0);
  const auto f = cosine(1);
  const auto q = qv_check(path, f, 1.0);
  CHECK(q.predicted <= 2.0 * 0.01 * f.sup_norm(1) * f.sup_norm(1));
  const auto windows = qv_windows(path, f, 1.0, 4);
  CHECK(windows.size() == 4);
  double s = 0.0;
  for (const auto& w : windows) s += w.qv.predicted;
  CHECK(s == doctest::Approx(q.predicted).epsilon(1e-12));
  const auto still = short_path(8, 1.0, 0.0, 3);
  const auto m = martingale_series(still, f, 1.0);
  REQUIRE(m.size() == 1);
  CHECK(m[0] == 0.0);
}

TEST_CASE("generator examples") {
  const auto g0 = generator_apply(ParticleConfig({0.3, 0.6}), constant_function(1.0), qn(3, 1.0));
  CHECK(g0.value == 0.0);
  CHECK(g0.bound >= 0.0);
  const auto g = generator_apply(ParticleConfig({0.5}), cosine(1), qn(2, 1.0));
  CHECK(std::abs(g.value) <= 1e-12);
  CHECK(std::abs(generator_direct(ParticleConfig({0.5}), cosine(1), qn(2, 1.0))) <= 1e-12);
  CHECK(g.bound == doctest::Approx(pi * pi * 4.0 + pi * pi * pi * 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(generator_direct(ParticleConfig({0.5, 0.5}), cosine(1), qn(3, 1.0)), DegenerateSpacing);
}

TEST_CASE("property: generator bound and cross-check on random configurations") {
  RandomSource r(4);
  for (int k = 0; k < 20000; ++k) {
    const std::size_t N = 2 + r.next_u64() % 100;
    const double beta = std::exp(r.uniform(-2.0, 3.0));
    const auto x = sample_config(qn(N, beta), r);
    const auto f = cosine(1 + static_cast<int>(k % 3));
    const auto g = generator_apply(x, f, qn(N, beta));
    CHECK(std::abs(g.value) <= g.bound);
    bool interior = true;
    for (std::size_t i = 1; i <= N; ++i) interior = interior && x.spacing(i) > 1e-3;
    if (interior) {
      CHECK(generator_direct(x, f, qn(N, beta)) == doctest::Approx(g.value).epsilon(1e-8));
    }
  }
}

TEST_CASE("marginal_test detects the wrong beta") {
  const auto xs = draws(qn(16, 1.0), 20000, 5);
  CHECK(marginal_test(xs, qn(16, 1.0)).failures() <= 1);
  const auto wrong = marginal_test(xs, qn(16, 2.0));
  CHECK(wrong.failure_fraction() > 0.5);
}

TEST_CASE("gap statistics") {
  const auto xs = draws(qn(4, 1.0), 10000, 6);
  CHECK(gap_statistics(xs, qn(4, 1.0), 1.0).empirical == 1.0);
  double prev = 2.0;
  for (const double beta : {0.3, 1.0, 10.0}) {
    const auto s = gap_statistics(draws(qn(4, beta), 50000, 7), qn(4, beta), 0.01);
    CHECK(s.empirical < prev);
    CHECK(std::abs(s.empirical - s.oracle) <= 3.0 * s.std_error);
    prev = s.empirical;
  }
}
