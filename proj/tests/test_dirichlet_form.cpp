#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "wdiff/corpus.hpp"
#include "wdiff/dirichlet_form.hpp"
#include "wdiff/errors.hpp"
#include "wdiff/quadrature.hpp"

using namespace wdiff;

namespace {

SimParams qn(std::size_t N, double beta) {
  SimParams p;
  p.N = N;
  p.beta = beta;
  return p;
}

ParticleConfig sorted_uniform(RandomSource& r, std::size_t N) {
  std::vector<double> x(N - 1);
  for (auto& v : x) v = r.uniform();
  std::sort(x.begin(), x.end());
  return ParticleConfig(x);
}

QuantileStep unit_step() {
  return QuantileStep::from_breakpoints(std::vector<double>{0.0, 0.5}, std::vector<double>{0.0, 1.0});
}

const VectorFieldSpec kOneBump{CylinderFunctional{}, bump()};

}  // namespace

TEST_CASE("condexp_quantile") {
  const auto id = condexp_quantile(ParticleConfig::equidistant(5), 5);
  for (const double t : {0.0, 0.13, 0.5, 0.77, 0.999}) CHECK(id(t) == doctest::Approx(t).epsilon(1e-15));
  const auto two = condexp_quantile(ParticleConfig({0.5}), 2);
  CHECK(two(0.5) == 0.5);
  CHECK(two(0.25) == doctest::Approx(0.25));
  const auto low = condexp_quantile(ParticleConfig({0.0, 0.0, 0.0}), 4);
  CHECK(low(0.3) == 0.0);
  CHECK(low(0.75) == 0.0);
  CHECK(low(0.875) == doctest::Approx(0.5));
}

TEST_CASE("hat_gradient exact values") {
  for (const std::size_t N : {2u, 7u, 64u, 512u}) {
    for (std::size_t i = 1; i < N; ++i) {
      CHECK(std::abs(hat_gradient(constant_function(1.0), N, i) - 1.0 / N) <= 1e-12);
      CHECK(std::abs(hat_gradient(identity_function(), N, i) - double(i) / double(N * N)) <= 1e-12);
    }
  }
}

TEST_CASE("property: hat_gradient is the derivative of <f, g_X>") {
  RandomSource r(1);
  const TestFunction fs[] = {cosine(3), sine(2), exponential(1.3), polynomial({0.2, -1.0, 3.0, 0.5}), bump()};
  for (const auto& f : fs) {
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t N = 2 + r.next_u64() % 30;
      const auto x = sorted_uniform(r, N);
      for (std::size_t i = 1; i < N; ++i) {
        std::vector<double> up(x.positions().begin(), x.positions().end()), dn = up;
        up[i - 1] += 1e-6;
        dn[i - 1] -= 1e-6;
        // Perturbed knots need not stay sorted; the pairing is linear in the knots anyway.
        const auto direct = [&](const std::vector<double>& v) {
          std::vector<double> k{0.0};
          k.insert(k.end(), v.begin(), v.end());
          k.push_back(1.0);
          double s = 0.0;
          for (std::size_t c = 0; c < N; ++c) {
            s += integrate_gl16([&](double t) { return f(t) * (k[c] + (N * t - c) * (k[c + 1] - k[c])); },
                                double(c) / N, double(c + 1) / N);
          }
          return s;
        };
        const double fd = (direct(up) - direct(dn)) / 2e-6;
        CHECK(std::abs(hat_gradient(f, N, i) - fd) <= 1e-6);
      }
      const auto proj = project_linear(f, N);
      CHECK(proj(x.positions()) == doctest::Approx(pairing(f, condexp_quantile(x, N))).epsilon(1e-12));
    }
  }
}

TEST_CASE("pairing on steps") {
  const auto g = parse_quantile("0:0.1;0.3:0.4;0.7:0.9");
  const auto f = exponential(0.7);
  const double ref = 0.1 * integrate_gl16(f.f, 0.0, 0.3) + 0.4 * integrate_gl16(f.f, 0.3, 0.7) +
                     0.9 * integrate_gl16(f.f, 0.7, 1.0);
  CHECK(pairing(f, g) == doctest::Approx(ref).epsilon(1e-13));
  CHECK(pairing(constant_function(2.0), QuantileStep::constant(0.25)) == doctest::Approx(0.5));
}

TEST_CASE("v_beta_discrete") {
  RandomSource r(2);
  for (const double beta : {0.3, 1.0, 7.0}) {
    for (int k = 0; k < 50; ++k) {
      const auto x = sorted_uniform(r, 2 + r.next_u64() % 50);
      CHECK(std::abs(v_beta_discrete(x, identity_function(), qn(x.N(), beta)) - (beta - 1.0)) <= 1e-12);
    }
    CHECK(std::abs(v_beta_discrete(ParticleConfig({0.5}), bump(), qn(2, beta))) <= 1e-15);
  }
  // Coincident particles use the derivative at the point.
  const auto tie = v_beta_discrete(ParticleConfig({0.4, 0.4}), bump(), qn(3, 1.0));
  const auto near = v_beta_discrete(ParticleConfig({0.4, 0.4 + 1e-9}), bump(), qn(3, 1.0));
  CHECK(tie == doctest::Approx(near).epsilon(1e-8));
}

TEST_CASE("v_beta_continuum") {
  for (const double beta : {0.3, 1.0, 7.0}) {
    CHECK(std::abs(v_beta_continuum(unit_step(), identity_function(), beta) - (beta - 1.0)) <= 1e-12);
    CHECK(v_beta_continuum(QuantileStep::constant(0.3), bump(), beta) == doctest::Approx(0.4 * beta).epsilon(1e-14));
    CHECK(std::abs(v_beta_continuum(unit_step(), bump(), beta)) <= 1e-15);
  }
}

TEST_CASE("divergence") {
  RandomSource r(3);
  const auto x = sorted_uniform(r, 9);
  const auto p = qn(9, 1.7);
  CHECK(divergence_discrete(x, kOneBump, p) == doctest::Approx(v_beta_discrete(x, bump(), p)).epsilon(1e-14));
  const VectorFieldSpec zero{parse_cylinder("id"), constant_function(0.0)};
  CHECK(divergence_discrete(x, zero, p) == 0.0);
  const VectorFieldSpec lin{CylinderFunctional::linear(constant_function(1.0)), bump()};
  CHECK(divergence_discrete(ParticleConfig({0.5}), lin, qn(2, 1.0)) == doctest::Approx(0.125).epsilon(1e-14));
  const auto g = parse_quantile("0:0;0.3126:0.4;0.5626:0.7;0.8126:1");
  CHECK(divergence_continuum(g, kOneBump, 1.3) == doctest::Approx(v_beta_continuum(g, bump(), 1.3)).epsilon(1e-14));
}

TEST_CASE("property: gradient pairing is a directional derivative") {
  RandomSource r(4);
  const auto w = parse_cylinder("2*cos:1*exp:0.5^2");
  for (int k = 0; k < 20; ++k) {
    const std::size_t N = 2 + r.next_u64() % 20;
    const auto x = sorted_uniform(r, N);
    const GridFunctional wN(w, N);
    std::vector<double> up(x.positions().begin(), x.positions().end()), dn = up;
    const double h = 1e-6;
    for (std::size_t i = 0; i < up.size(); ++i) {
      up[i] += h * bump()(x.positions()[i]);
      dn[i] -= h * bump()(x.positions()[i]);
    }
    const double fd = (wN.value(up) - wN.value(dn)) / (2 * h);
    CHECK(gradient_pairing_discrete(x, w, bump()) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("form estimates") {
  const RandomSource r(5);
  const auto c = form_estimate_discrete(CylinderFunctional::constant(3.0), qn(8, 1.0), 1000, r);
  CHECK(c.value == 0.0);
  CHECK(c.std_error == 0.0);
  for (const std::size_t N : {2u, 8u, 33u}) {
    const auto l = form_estimate_discrete(CylinderFunctional::linear(constant_function(1.0)), qn(N, 1.0), 500, r);
    CHECK(l.value == doctest::Approx(double(N - 1) / N).epsilon(1e-12));
    CHECK(l.std_error <= 1e-12);
  }
  CHECK(form_estimate_continuum(CylinderFunctional::constant(2.0), 16, 100, 1.0, r).value == 0.0);
}

TEST_CASE("ibp residuals") {
  const RandomSource r(6);
  const VectorFieldSpec zero{parse_cylinder("id"), constant_function(0.0)};
  const auto z = ibp_residual_discrete(parse_cylinder("cos:1"), zero, qn(8, 1.0), 1000, r);
  CHECK(z.value == 0.0);
  const auto c = ibp_residual_discrete(CylinderFunctional::constant(2.0), kOneBump, qn(8, 1.0), 100000, r);
  CHECK(std::abs(c.value) < 3.0 * c.std_error);
  const IbpPair pairs[] = {{parse_cylinder("id^2"), {parse_cylinder("id"), sine(2)}},
                           {parse_cylinder("exp:1"), {parse_cylinder("cos:1"), sine(1)}}};
  for (const auto& e : ibp_residuals(pairs, qn(8, 1.0), 100000, r)) CHECK(std::abs(e.value) < 3.0 * e.std_error);
  // Using the wrong beta in the divergence leaves a visible bias.
  const auto bad = ibp_residuals(pairs, qn(8, 1.0), 100000, r, {}, 3.0);
  CHECK(std::abs(bad[0].value) > 3.0 * bad[0].std_error);
}

TEST_CASE("projection norms") {
  const RandomSource r(7);
  for (const std::size_t N : {2u, 16u}) {
    CHECK(projection_norm(CylinderFunctional::constant(-1.5), N, 1.0, 100, r).value == doctest::Approx(1.5).epsilon(1e-15));
  }
  // Closed forms: E(int g)^2 = 7/24 and E(int t g)^2 = 11/90 at beta = 1.
  CHECK(linear_norm_exact(constant_function(1.0), 1.0) == doctest::Approx(std::sqrt(7.0 / 24.0)).epsilon(1e-10));
  CHECK(linear_norm_exact(identity_function(), 1.0) == doctest::Approx(std::sqrt(11.0 / 90.0)).epsilon(1e-10));
  const double b = 4.0;
  CHECK(linear_norm_exact(identity_function(), b) ==
        doctest::Approx(std::sqrt(2.0 / (3.0 * (b + 1.0)) * (b / 6.0 + 0.2))).epsilon(1e-10));
  // Conditional expectation contracts.
  const auto u = CylinderFunctional::linear(cosine(1));
  const double exact = linear_norm_exact(cosine(1), 1.0);
  for (const std::size_t N : {4u, 16u}) {
    const auto e = projection_norm(u, N, 1.0, 100000, r);
    CHECK(e.value <= exact + 3.0 * e.std_error);
  }
  const std::vector<std::size_t> Ns = {4, 8, 16, 64};
  const auto sw = projection_sweep(u, Ns, 1.0, 50000, r);
  for (std::size_t k = 0; k + 1 < Ns.size(); ++k) CHECK(sw.norms[k + 1].value >= sw.norms[k].value - 3.0 * sw.step_stderr[k]);
  const std::vector<std::size_t> bad = {3, 8};
  CHECK_THROWS_AS(projection_sweep(u, bad, 1.0, 10, r), InvalidArgument);
}

TEST_CASE("cylinder parsing") {
  const auto w = parse_cylinder("2*sin:1*exp:0.5");
  const auto g = parse_quantile("0:0.2;0.5:0.6");
  CHECK(w(g) == doctest::Approx(2.0 * pairing(sine(1), g) * pairing(exponential(0.5), g)).epsilon(1e-14));
  CHECK(parse_cylinder("3").is_constant());
  CHECK(parse_cylinder("id^2").factors()[0].power == 2);
  CHECK_THROWS_AS(parse_cylinder("nope:1"), InvalidArgument);
  CHECK_THROWS_AS((VectorFieldSpec{CylinderFunctional{}, cosine(1)}.validate()), InvalidArgument);
}

TEST_CASE("convergence sweeps on a shipped quantile") {
  const auto corpus = load_corpus(default_corpus_dir());
  REQUIRE(!corpus.quantiles.empty());
  std::vector<std::size_t> Ns;
  for (std::size_t N = 16; N <= 4096; N *= 2) Ns.push_back(N);
  const auto& g = corpus.quantiles.front();
  const auto v = v_beta_sweep(g, sine(1), 1.0, Ns);
  CHECK(is_decreasing(v, 1));
  CHECK(v.back().error() < 1e-2);
  const auto w = parse_cylinder("cos:1*id");
  CHECK(is_decreasing(pairing_sweep(g, w, bump(), Ns), 1));
  CHECK(is_decreasing(field_norm_sweep(g, {w, bump()}, Ns), 1));
  CHECK(grid_marginals(g, 4).positions()[0] == g(0.25));
}

TEST_CASE("is_decreasing") {
  const std::vector<SweepRow> down = {{16, 1.0, 0.0}, {32, 0.5, 0.0}, {64, 0.6, 0.0}, {128, 0.1, 0.0}};
  CHECK(is_decreasing(down, 1));
  CHECK_FALSE(is_decreasing(down, 0));
  const std::vector<SweepRow> flat = {{16, 1e-13, 0.0}, {32, 3e-13, 0.0}, {64, 2e-13, 0.0}, {128, 5e-13, 0.0}};
  CHECK(is_decreasing(flat, 0));
}

TEST_CASE("difference quotients") {
  const auto f = sine(2);
  CHECK(difference_quotient(f, 0.3, 0.3) == doctest::Approx(f.d1(0.3)).epsilon(1e-14));
  CHECK(difference_quotient(f, 0.3, 0.3 + 1e-7) == doctest::Approx(f.d1(0.3 + 5e-8)).epsilon(1e-12));
  CHECK(difference_quotient(f, 0.1, 0.6) == doctest::Approx((f(0.6) - f(0.1)) / 0.5).epsilon(1e-14));
  CHECK(difference_quotient(f, 0.2, 0.2, 1) == doctest::Approx(f.d2(0.2)).epsilon(1e-14));
}
