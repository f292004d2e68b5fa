#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wdiff/diagnostics.hpp"
#include "wdiff/dynamics.hpp"
#include "wdiff/errors.hpp"
#include "wdiff/measure.hpp"
#include "wdiff/stats.hpp"

using namespace wdiff;

namespace {

SimParams walk(std::size_t N, double beta, double eps) {
  SimParams p;
  p.N = N;
  p.beta = beta;
  p.epsilon = eps;
  p.dt = eps * eps;
  return p;
}

SimParams sde(std::size_t N, double beta, double dt, double delta) {
  SimParams p;
  p.N = N;
  p.beta = beta;
  p.dt = dt;
  p.delta_reg = delta;
  p.scheme = Scheme::RegularizedSde;
  return p;
}

bool ordered_in_unit(const ParticleConfig& x) {
  const auto p = x.positions();
  return std::is_sorted(p.begin(), p.end()) && (p.empty() || (p.front() >= 0.0 && p.back() <= 1.0));
}

}  // namespace

TEST_CASE("out-of-domain proposals return the current state") {
  const auto p = walk(4, 4.0, 0.05);
  const ParticleConfig x({1e-9, 0.5, 0.9});
  RandomSource r(1);
  KernelStats st;
  int rejected = 0;
  for (int k = 0; k < 200; ++k) {
    const auto before = st.out_of_domain;
    const auto y = ball_walk_step(x, p, r, &st);
    if (st.out_of_domain > before) {
      ++rejected;
      CHECK(y == x);
    } else {
      CHECK(y != x);
    }
  }
  CHECK(rejected > 50);
  // beta = N: every in-domain proposal is accepted.
  CHECK(st.metropolis_rejections == 0);
}

TEST_CASE("property: ball walk detailed balance") {
  RandomSource r(2);
  for (const double beta : {0.5, 2.0, 9.0}) {
    const auto p = walk(5, beta, 0.05);
    int checked = 0;
    while (checked < 500) {
      const auto x = sample_config(p, r);
      std::vector<double> y(x.positions().begin(), x.positions().end());
      for (auto& v : y) v += p.epsilon * r.uniform(-1.0, 1.0);
      if (!std::is_sorted(y.begin(), y.end()) || y.front() <= 0.0 || y.back() >= 1.0) continue;
      if (std::adjacent_find(y.begin(), y.end()) != y.end()) continue;
      bool distinct = x.positions().front() > 0.0 && x.positions().back() < 1.0;
      for (std::size_t i = 1; i < x.n_particles(); ++i) distinct = distinct && x.positions()[i] > x.positions()[i - 1];
      if (!distinct) continue;
      const ParticleConfig yc(y);
      const double lhs = log_density_qn(x, p) + ball_walk_log_kernel(x, yc, p);
      const double rhs = log_density_qn(yc, p) + ball_walk_log_kernel(yc, x, p);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
      ++checked;
    }
  }
}

TEST_CASE("ball walk from q_N stays q_N (N=8, beta=1, eps=0.05, 10^6 steps in replicas)") {
  const auto p = walk(8, 1.0, 0.05);
  std::vector<ParticleConfig> finals;
  KernelStats st;
  for (int rep = 0; rep < 10000; ++rep) {
    RandomSource r(3, rep);
    auto x = stationary_start(p, r);
    for (int s = 0; s < 100; ++s) x = ball_walk_step(x, p, r, &st);
    finals.push_back(x);
  }
  CHECK(st.proposals == 1000000);
  CHECK(marginal_test(finals, p).failures() <= 1);
}

TEST_CASE("property: time averages of a long ball-walk run approach i/N") {
  const auto p = walk(4, 10.0, 0.05);
  RandomSource r(4);
  auto x = stationary_start(p, r);
  constexpr int kBatches = 200, kLen = 2000;
  std::vector<Accumulator> batch(3);
  for (int b = 0; b < kBatches; ++b) {
    double sums[3] = {0, 0, 0};
    for (int s = 0; s < kLen; ++s) {
      x = ball_walk_step(x, p, r);
      for (int i = 0; i < 3; ++i) sums[i] += x.positions()[i];
    }
    for (int i = 0; i < 3; ++i) batch[i].add(sums[i] / kLen);
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(batch[i].mean() - (i + 1) / 4.0) < 3.0 * batch[i].stderr_mean());
  }
}

TEST_CASE("exact-rejection kernel targets q_N weighted by the box mass") {
  // N=2, beta=2: q_N is uniform, the box mass is w(x) = min(1, x+1/2) - max(0, x-1/2),
  // and the invariant law has CDF (x^2 + x) / 1.5 on [0, 1/2], mirrored above.
  auto p = walk(2, 2.0, 0.5);
  p.kernel = BallWalkKernel::ExactRejection;
  std::vector<double> xs;
  for (int rep = 0; rep < 20000; ++rep) {
    RandomSource r(5, rep);
    auto x = ParticleConfig({0.5});
    for (int s = 0; s < 30; ++s) x = ball_walk_step(x, p, r);
    xs.push_back(x.positions()[0]);
  }
  const auto cdf = [](double x) {
    const auto half = [](double v) { return (v * v + v) / 1.5; };
    return x <= 0.5 ? half(x) : 1.0 - half(1.0 - x);
  };
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    d = std::max({d, std::abs(cdf(xs[k]) - k / n), std::abs((k + 1) / n - cdf(xs[k]))});
  }
  CHECK(kolmogorov_survival(std::sqrt(n) * d) > 0.01);
  CHECK(ks_test_beta(xs, 1.0, 1.0).p_value < 1e-6);

  auto q = walk(3, 2.0, 1e-6);
  q.kernel = BallWalkKernel::ExactRejection;
  q.max_rejection_tries = 10;
  RandomSource r(6);
  CHECK_THROWS_AS(ball_walk_step(ParticleConfig::equidistant(3), q, r), SamplingError);
}

TEST_CASE("sde drift and noiseless steps") {
  auto p = sde(3, 0.3, 1e-3, 0.0);
  const ParticleConfig x({0.2, 0.8});
  CHECK(sde_drift(x, p)[0] == doctest::Approx(-3.0).epsilon(1e-13));
  const std::vector<double> zero(2, 0.0);
  CHECK(sde_step(x, p, zero).positions()[0] == doctest::Approx(0.2 - 3e-3).epsilon(1e-13));

  const auto flat = sde(5, 5.0, 0.01, 0.0);
  const auto eq = ParticleConfig::equidistant(5);
  CHECK(sde_step(eq, flat, std::vector<double>(4, 0.0)) == eq);

  CHECK(reflect_unit(-0.01) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(reflect_unit(1.02) == doctest::Approx(0.98).epsilon(1e-15));
  CHECK(reflect_unit(0.4) == 0.4);
}

TEST_CASE("sde reflection at zero") {
  const auto p = sde(3, 3.0, 1e-4, 0.0);
  // Move x^1 = 0.05 by -0.06 to -0.01, which folds to 0.01.
  const double step = -0.06 / std::sqrt(2.0 * p.dt);
  const auto y = sde_step(ParticleConfig({0.05, 0.5}), p, std::vector<double>{step, 0.0});
  CHECK(y.positions()[0] == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("sde step-size guard") {
  const auto p = sde(3, 0.3, 1.0, 0.0);
  CHECK_THROWS_AS(sde_step(ParticleConfig({0.2, 0.8}), p, std::vector<double>{0.0, 0.0}), StepSizeError);
  const auto q = sde(3, 0.3, 1e-4, 0.0);
  CHECK_THROWS_AS(sde_step(ParticleConfig({0.5, 0.5}), q, std::vector<double>{0.0, 0.0}), StepSizeError);
  auto path_params = sde(3, 0.3, 1.0, 1e-6);
  path_params.horizon = 1.0;
  RandomSource r(7);
  try {
    simulate_path(ParticleConfig({0.2, 0.8}), path_params, 0.5, r);
    FAIL("expected a step-size error");
  } catch (const StepSizeError& e) {
    CHECK(std::string(e.what()).find("macroscopic time") != std::string::npos);
    CHECK(e.time() >= 0.0);
  }
}

TEST_CASE("property: sde with beta = N is Brownian with variance 2t") {
  const auto p = sde(3, 3.0, 1e-4, 1e-6);
  Accumulator acc;
  constexpr int kSteps = 20;
  for (int rep = 0; rep < 40000; ++rep) {
    RandomSource r(8, rep);
    auto x = ParticleConfig({1.0 / 3.0, 2.0 / 3.0});
    for (int s = 0; s < kSteps; ++s) x = sde_step(x, p, r);
    acc.add(x.positions()[0] - 1.0 / 3.0);
  }
  const double var = acc.variance() + acc.mean() * acc.mean();
  CHECK(std::abs(var / (2.0 * kSteps * p.dt) - 1.0) < 0.05);
}

TEST_CASE("property: both schemes keep configurations ordered in [0,1]") {
  RandomSource r(9);
  auto w = walk(8, 0.5, 0.1);
  auto x = stationary_start(w, r);
  bool ok = true;
  for (int s = 0; s < 1000000 && ok; ++s) {
    x = ball_walk_step(x, w, r);
    ok = ordered_in_unit(x);
  }
  CHECK(ok);
  const auto e = sde(8, 0.5, 1e-6, 1e-3);
  x = stationary_start(e, r);
  for (int s = 0; s < 1000000 && ok; ++s) {
    x = sde_step(x, e, r);
    ok = ordered_in_unit(x);
  }
  CHECK(ok);
}

TEST_CASE("simulate_path recording grid") {
  auto p = walk(4, 1.0, 0.05);
  p.horizon = 0.0;
  RandomSource r(10);
  const auto x0 = stationary_start(p, r);
  const auto empty = simulate_path(x0, p, 0.1, r);
  REQUIRE(empty.times.size() == 1);
  CHECK(empty.times[0] == 0.0);
  CHECK(empty.states[0] == x0);

  p.horizon = 1.0;
  // N * 0.1 / eps^2 = 160 exactly; the count must not lose a step to rounding.
  CHECK(steps_per_record(p, 0.1) == 160);
  const auto path = simulate_path(x0, p, 0.1, r);
  CHECK(path.times.size() == 11);
  CHECK(path.stats.proposals == 10 * steps_per_record(p, 0.1));
  for (std::size_t k = 1; k < path.times.size(); ++k) CHECK(path.times[k] > path.times[k - 1]);
}

TEST_CASE("determinism") {
  auto p = walk(6, 1.0, 0.05);
  p.horizon = 0.2;
  p.seed = 42;
  RandomSource a(11), b(11);
  const auto x0 = ParticleConfig::equidistant(6);
  const auto pa = simulate_path(x0, p, 0.05, a);
  const auto pb = simulate_path(x0, p, 0.05, b);
  CHECK(pa.states == pb.states);
  const auto serial = simulate_replicas(p, 0.05, 7, StartMode::Stationary, 1);
  const auto threaded = simulate_replicas(p, 0.05, 7, StartMode::Stationary, 3);
  for (std::size_t k = 0; k < 7; ++k) CHECK(serial[k].states == threaded[k].states);
}

TEST_CASE("path csv round trip") {
  auto p = sde(5, 0.7, 1e-5, 1e-3);
  p.horizon = 0.001;
  RandomSource r(12);
  const auto path = simulate_path(stationary_start(p, r), p, 1e-4, r);
  std::stringstream ss;
  write_path_csv(ss, path);
  const auto back = read_path_csv(ss, p);
  CHECK(back.times == path.times);
  CHECK(back.states == path.states);
}
