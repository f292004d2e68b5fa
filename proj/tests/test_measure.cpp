#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "wdiff/diagnostics.hpp"
#include "wdiff/errors.hpp"
#include "wdiff/measure.hpp"
#include "wdiff/stats.hpp"

using namespace wdiff;

namespace {

SimParams qn(std::size_t N, double beta) {
  SimParams p;
  p.N = N;
  p.beta = beta;
  return p;
}

ParticleConfig random_config(RandomSource& r, std::size_t N, bool ties) {
  std::vector<double> x(N - 1);
  for (auto& v : x) v = r.uniform();
  if (ties && x.size() > 2) {
    x[1] = x[0];
    x.back() = 1.0;
  }
  std::sort(x.begin(), x.end());
  return ParticleConfig(x);
}

}  // namespace

TEST_CASE("sample_config with N=1 has no particles") {
  RandomSource r(1);
  CHECK(sample_config(qn(1, 0.7), r).n_particles() == 0);
}

TEST_CASE("sample_config means are i/N") {
  RandomSource r(2);
  const auto p = qn(50, 1.0);
  std::vector<Accumulator> acc(49);
  for (int s = 0; s < 100000; ++s) {
    const auto x = sample_config(p, r);
    for (std::size_t i = 0; i < 49; ++i) acc[i].add(x.positions()[i]);
  }
  for (std::size_t i = 0; i < 49; ++i) {
    CHECK(std::abs(acc[i].mean() - (i + 1) / 50.0) < 3.5 * acc[i].stderr_mean());
  }
}

TEST_CASE("N=2, beta=2 gives a uniform particle") {
  RandomSource r(3);
  std::vector<double> xs;
  for (int s = 0; s < 100000; ++s) xs.push_back(sample_config(qn(2, 2.0), r).positions()[0]);
  CHECK(ks_test_beta(xs, 1.0, 1.0).p_value > 0.01);
}

TEST_CASE("sampled configurations are ordered points of the simplex") {
  RandomSource r(4);
  for (const double beta : {0.01, 0.3, 1.0, 50.0}) {
    for (int s = 0; s < 2000; ++s) {
      const auto x = sample_config(qn(64, beta), r);
      CHECK_NOTHROW(check_simplex(x.positions()));
    }
  }
}

TEST_CASE("log_density_qn") {
  CHECK(log_density_qn(ParticleConfig({0.5}), qn(2, 2.0)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(log_density_qn(ParticleConfig({0.137}), qn(2, 2.0)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(log_density_qn(ParticleConfig({0.3, 0.3}), qn(3, 1.0)), DegenerateSpacing);
  CHECK_THROWS_AS(log_density_qn(ParticleConfig({1.0}), qn(2, 1.0)), DegenerateSpacing);
}

TEST_CASE("embed_quantile") {
  const auto g = embed_quantile(ParticleConfig({0.5}));
  CHECK(g == QuantileStep::from_breakpoints(std::vector<double>{0.0, 0.5}, std::vector<double>{0.0, 0.5}));
  CHECK(embed_quantile(ParticleConfig()) == QuantileStep::constant(0.0));
  const auto top = embed_quantile(ParticleConfig({1.0, 1.0, 1.0}));
  const auto mu = measure_of_quantile(top);
  REQUIRE(mu.size() == 2);
  CHECK(mu.atoms()[0] == Atom{0.0, 0.25});
  CHECK(mu.atoms()[1] == Atom{1.0, 0.75});
}

TEST_CASE("measure_of_quantile and quantile_of_measure") {
  CHECK(measure_of_quantile(QuantileStep::constant(0.4)) == EmpiricalMeasure({{0.4, 1.0}}));
  const auto mu = measure_of_quantile(embed_quantile(ParticleConfig::equidistant(4)));
  CHECK(mu == EmpiricalMeasure({{0.0, 0.25}, {0.25, 0.25}, {0.5, 0.25}, {0.75, 0.25}}));
  CHECK(quantile_of_measure(EmpiricalMeasure({{0.3, 1.0}})) == QuantileStep::constant(0.3));
  CHECK(quantile_of_measure(EmpiricalMeasure({{0.2, 0.5}, {0.8, 0.5}})) ==
        QuantileStep::from_breakpoints(std::vector<double>{0.0, 0.5}, std::vector<double>{0.2, 0.8}));
}

TEST_CASE("empirical_measure") {
  const ParticleConfig x({0.25, 0.75});
  CHECK(empirical_measure(x, false) == EmpiricalMeasure({{0.25, 0.5}, {0.75, 0.5}}));
  const auto nu = empirical_measure(x, true);
  REQUIRE(nu.size() == 3);
  CHECK(nu.atoms()[0].position == 0.0);
  CHECK(nu.atoms()[1].position == 0.25);
  CHECK(nu.atoms()[2].position == 0.75);
  for (const auto& a : nu.atoms()) CHECK(a.weight == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(empirical_measure(ParticleConfig({0.5, 0.5}), false) == EmpiricalMeasure({{0.5, 1.0}}));
  CHECK_THROWS_AS(empirical_measure(ParticleConfig(), false), InvalidArgument);
}

TEST_CASE("gaps") {
  CHECK(gaps(EmpiricalMeasure({{0.5, 1.0}})) == std::vector<Interval>{{0.0, 0.5}, {0.5, 1.0}});
  CHECK(gaps(EmpiricalMeasure({{0.0, 0.5}, {1.0, 0.5}})) == std::vector<Interval>{{0.0, 1.0}});
  CHECK(gaps(EmpiricalMeasure({{0.0, 0.2}, {0.25, 0.4}, {0.75, 0.4}})) ==
        std::vector<Interval>{{0.0, 0.25}, {0.25, 0.75}, {0.75, 1.0}});
}

TEST_CASE("wasserstein2") {
  const auto zero = QuantileStep::constant(0.0);
  const auto one = QuantileStep::constant(1.0);
  const auto half = QuantileStep::from_breakpoints(std::vector<double>{0.0, 0.5}, std::vector<double>{0.0, 1.0});
  CHECK(wasserstein2(zero, one) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(wasserstein2(half, half) == 0.0);
  CHECK(wasserstein2(zero, half) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("property: rho of iota(x) is nu^N") {
  RandomSource r(5);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t N = 2 + r.next_u64() % 40;
    const auto x = random_config(r, N, k % 3 == 0);
    CHECK(measure_of_quantile(embed_quantile(x)) == empirical_measure(x, true));
  }
}

TEST_CASE("property: kappa and rho are mutually inverse") {
  RandomSource r(6);
  for (int k = 0; k < 1000; ++k) {
    const auto x = random_config(r, 2 + r.next_u64() % 40, k % 2 == 0);
    const auto g = embed_quantile(x);
    CHECK(quantile_of_measure(measure_of_quantile(g)) == g);
    const auto mu = empirical_measure(x, k % 4 == 0);
    CHECK(measure_of_quantile(quantile_of_measure(mu)) == mu);
  }
}

TEST_CASE("property: wasserstein2 is a metric") {
  RandomSource r(7);
  for (int k = 0; k < 1000; ++k) {
    const auto a = embed_quantile(random_config(r, 2 + r.next_u64() % 10, false));
    const auto b = embed_quantile(random_config(r, 2 + r.next_u64() % 10, false));
    const auto c = embed_quantile(random_config(r, 2 + r.next_u64() % 10, true));
    CHECK(wasserstein2(a, a) == 0.0);
    CHECK(wasserstein2(a, b) == doctest::Approx(wasserstein2(b, a)).epsilon(1e-15));
    CHECK(wasserstein2(a, c) <= wasserstein2(a, b) + wasserstein2(b, c) + 1e-12);
  }
}

TEST_CASE("property: exact samples pass the marginal KS suite") {
  RandomSource r(8);
  for (const double beta : {0.3, 1.0, 10.0}) {
    const auto p = qn(8, beta);
    std::vector<ParticleConfig> xs;
    for (int s = 0; s < 100000; ++s) xs.push_back(sample_config(p, r));
    const auto rep = marginal_test(xs, p);
    CHECK(rep.failures() <= 1);
  }
}

TEST_CASE("serialization round trips") {
  RandomSource r(9);
  for (int k = 0; k < 200; ++k) {
    const auto x = random_config(r, 2 + r.next_u64() % 20, k % 2 == 0);
    CHECK(parse_config(format_config(x)) == x);
    // Breakpoints are rebuilt from lengths, so they agree to rounding only.
    const auto g = embed_quantile(x);
    const auto back = parse_quantile(format_quantile(g));
    CHECK(back.values() == g.values());
    const auto b0 = g.breakpoints(), b1 = back.breakpoints();
    REQUIRE(b0.size() == b1.size());
    for (std::size_t i = 0; i < b0.size(); ++i) CHECK(std::abs(b0[i] - b1[i]) <= 1e-15);
  }
  CHECK(parse_config("") == ParticleConfig());
  CHECK_THROWS_AS(parse_config("0.5,0.2"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("0.5,abc"), InvalidArgument);
  CHECK(parse_quantile("0:0;0.5:1") == QuantileStep::from_breakpoints(std::vector<double>{0.0, 0.5}, std::vector<double>{0.0, 1.0}));
}
