#include "wdiff/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "wdiff/corpus.hpp"
#include "wdiff/diagnostics.hpp"
#include "wdiff/dirichlet_form.hpp"
#include "wdiff/dynamics.hpp"
#include "wdiff/errors.hpp"
#include "wdiff/interface_model.hpp"
#include "wdiff/parallel.hpp"
#include "wdiff/quadrature.hpp"
#include "wdiff/stats.hpp"

namespace wdiff {

namespace {

using Clock = std::chrono::steady_clock;

std::string label(std::size_t N, double beta) {
  return "N=" + std::to_string(N) + " beta=" + format_double(beta);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

SimParams model(std::size_t N, double beta, std::uint64_t seed) {
  SimParams p;
  p.N = N;
  p.beta = beta;
  p.seed = seed;
  return p;
}

std::uint64_t criterion_seed(const VerifyOptions& opt, int id) { return mix64(opt.seed + 0x100u * id); }

/// M draws from q_N in fixed blocks; block b uses base.derive(b).
std::vector<ParticleConfig> draw_samples(const SimParams& p, std::size_t M, const RandomSource& base,
                                         unsigned jobs) {
  constexpr std::size_t kBlock = 4096;
  std::vector<ParticleConfig> out(M);
  const std::size_t blocks = (M + kBlock - 1) / kBlock;
  parallel_for(blocks, jobs, [&](std::size_t b) {
    RandomSource r = base.derive(b);
    for (std::size_t s = b * kBlock; s < std::min(M, (b + 1) * kBlock); ++s) out[s] = sample_config(p, r);
  });
  return out;
}

struct ChainFinals {
  std::vector<ParticleConfig> states;
  KernelStats stats;
};

ChainFinals ball_walk_finals(const SimParams& p, std::size_t replicas, std::size_t steps, StartMode start,
                             const RandomSource& base, unsigned jobs) {
  ChainFinals res;
  res.states.resize(replicas);
  std::vector<KernelStats> stats(replicas);
  parallel_for(replicas, jobs, [&](std::size_t r) {
    RandomSource rng = base.derive(r);
    ParticleConfig x = start == StartMode::Stationary ? stationary_start(p, rng) : ParticleConfig::equidistant(p.N);
    for (std::size_t s = 0; s < steps; ++s) x = ball_walk_step(x, p, rng, &stats[r]);
    res.states[r] = std::move(x);
  });
  for (const auto& s : stats) res.stats += s;
  return res;
}

std::string corpus_dir(const VerifyOptions& opt) {
  return opt.corpus_dir.empty() ? default_corpus_dir() : opt.corpus_dir;
}

Corpus corpus_for(const VerifyOptions& opt) { return load_corpus(corpus_dir(opt)); }

/// Quantiles with jumps away from the dyadic grids; optional.
std::vector<QuantileStep> generic_quantiles(const VerifyOptions& opt) {
  try {
    return load_quantiles(corpus_dir(opt) + "/quantiles_generic.txt");
  } catch (const InvalidArgument&) {
    return {};
  }
}

// ---------------------------------------------------------------------------
// 1. Stationarity

CriterionResult check_stationarity(const VerifyOptions& opt) {
  CriterionResult res{1, "stationarity", false, "", {}, 0.0};
  const std::size_t M = opt.quick ? 10'000 : 100'000;
  const std::size_t R = 10'000;
  const std::size_t burn = opt.quick ? 50 : 200;
  const RandomSource base(criterion_seed(opt, 1));
  std::size_t exact_tests = 0, exact_fail = 0, walk_tests = 0, walk_fail = 0;
  std::uint64_t stream = 0;
  double min_acc = 1.0;
  for (const std::size_t N : {4u, 16u, 64u}) {
    for (const double beta : {0.3, 1.0, 10.0}) {
      const auto p = model(N, beta, opt.seed);
      auto ref = p;
      ref.beta = beta * opt.tamper_beta;
      const auto samples = draw_samples(p, M, base.derive(stream++), opt.jobs);
      const auto rep = marginal_test(samples, ref);
      exact_tests += rep.coordinates.size();
      exact_fail += rep.failures();
      for (std::size_t i = 0; i < rep.coordinates.size(); ++i) {
        res.rows.push_back({"exact " + label(N, beta), "ks_pvalue_x" + std::to_string(i + 1),
                            rep.coordinates[i].p_value, rep.coordinates[i].statistic});
      }
      auto walk = p;
      walk.epsilon = 0.05;
      const auto chain = ball_walk_finals(walk, R, burn, StartMode::Stationary, base.derive(stream++), opt.jobs);
      const auto wrep = marginal_test(chain.states, ref);
      walk_tests += wrep.coordinates.size();
      walk_fail += wrep.failures();
      min_acc = std::min(min_acc, chain.stats.acceptance_rate());
      res.rows.push_back({"ballwalk " + label(N, beta), "acceptance_rate", chain.stats.acceptance_rate(), 0.0});
      res.rows.push_back({"ballwalk " + label(N, beta), "ks_failures", double(wrep.failures()), 0.0});
    }
  }
  // Longer chains in cells where the walk actually moves: invariance from a
  // stationary start, and mixing from the equidistant start (only N=4, beta=10
  // mixes within a few thousand steps; clumpy cells take far longer).
  struct LongCell {
    std::size_t N;
    double beta, epsilon;
    std::size_t steps;
    StartMode start;
  };
  const LongCell cells[] = {{4, 10.0, 0.05, 4000, StartMode::Equidistant},
                            {4, 1.0, 0.05, 4000, StartMode::Stationary},
                            {16, 10.0, 0.01, 4000, StartMode::Stationary}};
  std::vector<ParticleConfig> control_states;
  for (const auto& c : cells) {
    auto mix = model(c.N, c.beta, opt.seed);
    mix.epsilon = c.epsilon;
    const auto steps = opt.quick ? c.steps / 4 : c.steps;
    auto mixed = ball_walk_finals(mix, R, steps, c.start, base.derive(stream++), opt.jobs);
    auto ref = mix;
    ref.beta = c.beta * opt.tamper_beta;
    const auto mrep = marginal_test(mixed.states, ref);
    walk_tests += mrep.coordinates.size();
    walk_fail += mrep.failures();
    const std::string tag = std::string(c.start == StartMode::Stationary ? "ballwalk-long " : "ballwalk-mixing ") +
                            label(c.N, c.beta) + " eps=" + format_double(c.epsilon);
    res.rows.push_back({tag, "ks_failures", static_cast<double>(mrep.failures()), 0.0});
    res.rows.push_back({tag, "acceptance_rate", mixed.stats.acceptance_rate(), 0.0});
    if (control_states.empty()) control_states = std::move(mixed.states);
  }
  // Negative control: the first mixed chain against the wrong law.
  auto wrong = model(cells[0].N, 1.0, 0);
  const auto nrep = marginal_test(control_states, wrong);
  const bool control_rejects = 2 * nrep.failures() > nrep.coordinates.size();
  res.rows.push_back({"negative-control " + label(cells[0].N, cells[0].beta), "ks_failures_vs_beta1",
                      static_cast<double>(nrep.failures()), 0.0});

  const double exact_frac = double(exact_fail) / double(exact_tests);
  const double walk_frac = double(walk_fail) / double(walk_tests);
  res.passed = exact_frac <= 0.03 && walk_frac <= 0.03 && control_rejects;
  res.summary = "exact q_N: " + std::to_string(exact_fail) + "/" + std::to_string(exact_tests) +
                " KS rejections at 1% (" + fmt(100 * exact_frac, 3) + "%); ball walk: " +
                std::to_string(walk_fail) + "/" + std::to_string(walk_tests) + " (" + fmt(100 * walk_frac, 3) +
                "%), min acceptance " + fmt(min_acc, 3) + "; wrong-beta control " +
                (control_rejects ? "rejected" : "NOT rejected");
  return res;
}

// ---------------------------------------------------------------------------
// 2. Generator bound

ParticleConfig fuzz_config(RandomSource& r, std::size_t N, double beta) {
  const int kind = static_cast<int>(r.next_u64() % 4);
  std::vector<double> x(N - 1);
  switch (kind) {
    case 0:
      return sample_config(model(N, beta, 0), r);
    case 1:
      for (auto& v : x) v = r.uniform();
      break;
    case 2: {
      // Clumps: few distinct sites, many ties.
      const std::size_t sites = 1 + r.next_u64() % std::max<std::size_t>(1, N / 4);
      std::vector<double> s(sites);
      for (auto& v : s) v = r.uniform();
      for (auto& v : x) v = s[r.next_u64() % sites];
      break;
    }
    default:
      // Mass pushed to the endpoints, including exact 0 and 1.
      for (auto& v : x) {
        const double u = r.uniform();
        v = u < 0.25 ? 0.0 : u > 0.75 ? 1.0 : std::pow(r.uniform(), 8.0) * (u < 0.5 ? 1.0 : -1.0) + (u < 0.5 ? 0.0 : 1.0);
      }
      break;
  }
  std::sort(x.begin(), x.end());
  return ParticleConfig(std::move(x));
}

CriterionResult check_generator(const VerifyOptions& opt) {
  CriterionResult res{2, "generator bound", false, "", {}, 0.0};
  const std::size_t M = opt.quick ? 10'000 : 100'000;
  const std::size_t Ns[] = {2, 3, 4, 8, 16, 64, 256};
  const double betas[] = {0.3, 1.0, 10.0};
  const RandomSource base(criterion_seed(opt, 2));
  const TestFunction fs[] = {cosine(1), cosine(2), cosine(3)};
  constexpr std::size_t kBlock = 1000;
  const std::size_t blocks = (M + kBlock - 1) / kBlock;
  struct Tally {
    std::size_t violations[3] = {0, 0, 0};
    double worst[3] = {0, 0, 0};
    std::size_t cross_checked = 0;
    double cross_err = 0.0;
  };
  std::vector<Tally> tallies(blocks);
  parallel_for(blocks, opt.jobs, [&](std::size_t b) {
    RandomSource r = base.derive(b);
    auto& t = tallies[b];
    for (std::size_t s = b * kBlock; s < std::min(M, (b + 1) * kBlock); ++s) {
      const std::size_t N = Ns[r.next_u64() % std::size(Ns)];
      const double beta = betas[r.next_u64() % std::size(betas)];
      const auto x = fuzz_config(r, N, beta);
      auto p = model(N, beta * opt.tamper_beta, 0);
      bool interior = true;
      for (std::size_t i = 1; i <= N; ++i) interior = interior && x.spacing(i) > 1e-3;
      for (int k = 0; k < 3; ++k) {
        const auto g = generator_apply(x, fs[k], p);
        if (!(std::abs(g.value) <= g.bound)) ++t.violations[k];
        t.worst[k] = std::max(t.worst[k], std::abs(g.value) / g.bound);
        if (interior) {
          const double direct = generator_direct(x, fs[k], p);
          t.cross_err = std::max(t.cross_err, std::abs(direct - g.value) / (1.0 + std::abs(direct)));
          ++t.cross_checked;
        }
      }
    }
  });
  Tally all;
  for (const auto& t : tallies) {
    for (int k = 0; k < 3; ++k) {
      all.violations[k] += t.violations[k];
      all.worst[k] = std::max(all.worst[k], t.worst[k]);
    }
    all.cross_checked += t.cross_checked;
    all.cross_err = std::max(all.cross_err, t.cross_err);
  }
  std::size_t total_viol = 0;
  for (int k = 0; k < 3; ++k) {
    res.rows.push_back({fs[k].name, "violations", double(all.violations[k]), 0.0});
    res.rows.push_back({fs[k].name, "max_abs_value_over_bound", all.worst[k], 0.0});
    total_viol += all.violations[k];
  }
  res.rows.push_back({"interior", "max_rel_diff_vs_direct_form", all.cross_err, 0.0});
  res.passed = total_viol == 0 && all.cross_err < 1e-8;
  res.summary = std::to_string(total_viol) + " violations in " + std::to_string(3 * M) +
                " evaluations (cos k pi t, k=1..3); max |value|/bound " +
                fmt(std::max({all.worst[0], all.worst[1], all.worst[2]}), 3) +
                "; direct-form max rel. diff " + fmt(all.cross_err, 2) + " on " +
                std::to_string(all.cross_checked) + " interior evaluations";
  return res;
}

// ---------------------------------------------------------------------------
// 3 and 4. Quadratic variation and martingale increments

}  // namespace

std::vector<CriterionResult> run_martingale_criteria(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult qv{3, "quadratic variation", false, "", {}, 0.0};
  CriterionResult mg{4, "martingale increments", false, "", {}, 0.0};
  SimParams p = model(64, 1.0, criterion_seed(opt, 3));
  p.scheme = Scheme::RegularizedSde;
  p.dt = 4e-5;
  p.delta_reg = std::sqrt(p.dt);
  p.horizon = 0.005;
  const std::size_t records = 1000;
  const double record_every = p.horizon / records;
  const std::size_t R = opt.quick ? 100 : 200;
  const auto paths = simulate_replicas(p, record_every, R, StartMode::Stationary, opt.jobs);
  const auto f = cosine(1);
  const double beta_ref = p.beta * opt.tamper_beta;
  const double sup1 = f.sup_norm(1);

  double realized = 0.0, predicted = 0.0, worst_window = 0.0;
  std::size_t window_viol = 0, horizon_viol = 0;
  const std::size_t K = paths.front().times.size();
  std::vector<Accumulator> lag(K);
  for (std::size_t r = 0; r < R; ++r) {
    const auto& path = paths[r];
    const auto q = qv_check(path, f, beta_ref);
    realized += q.realized;
    predicted += q.predicted;
    if (q.predicted > 2.0 * p.horizon * sup1 * sup1) ++horizon_viol;
    for (const auto& w : qv_windows(path, f, beta_ref, 10)) {
      worst_window = std::max(worst_window, w.qv.realized / w.bound);
      if (w.qv.realized > 1.05 * w.bound) ++window_viol;
    }
    qv.rows.push_back({std::to_string(r), "qv_realized", q.realized, 0.0});
    qv.rows.push_back({std::to_string(r), "qv_predicted", q.predicted, 0.0});
    const auto m = martingale_series(path, f, beta_ref);
    for (std::size_t k = 0; k < K; ++k) lag[k].add(m[k]);
  }
  const double ratio = realized / predicted;
  qv.passed = window_viol == 0 && horizon_viol == 0 && ratio >= 0.85 && ratio <= 1.15;
  qv.summary = "realized/predicted " + fmt(ratio, 4) + " over " + std::to_string(R) +
               " replicas (band [0.85,1.15]); " + std::to_string(window_viol) + " of " +
               std::to_string(10 * R) + " windows above 1.05 x 2|w| ||f'||^2 (worst " + fmt(worst_window, 3) + ")";
  qv.rows.push_back({"all", "qv_ratio", ratio, 0.0});
  qv.rows.push_back({"all", "worst_window_over_bound", worst_window, 0.0});

  std::size_t outside = 0;
  double max_z = 0.0;
  for (std::size_t k = 1; k < K; ++k) {
    const auto e = estimate(lag[k]);
    const double z = e.std_error > 0.0 ? e.value / e.std_error : 0.0;
    max_z = std::max(max_z, std::abs(z));
    if (std::abs(e.value) > 3.0 * e.std_error) ++outside;
    mg.rows.push_back({"t=" + format_double(paths.front().times[k]), "mean_M", e.value, e.std_error});
  }
  mg.passed = outside == 0;
  mg.summary = std::to_string(outside) + " of " + std::to_string(K - 1) +
               " recorded lags with |mean M_t| > 3 SE over " + std::to_string(R) + " replicas (max |z| " +
               fmt(max_z, 3) + ")";
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  qv.seconds = mg.seconds = secs / 2;
  return {qv, mg};
}

namespace {

// ---------------------------------------------------------------------------
// 5. Hat gradient

/// <f, g_X> by direct cellwise quadrature of f * g_X, independent of the hat weights.
double direct_pairing(const TestFunction& f, std::span<const double> knots) {
  const std::size_t N = knots.size() - 1;
  const double n = static_cast<double>(N);
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double a = i / n;
    const double y0 = knots[i], y1 = knots[i + 1];
    s += integrate_gl16([&](double t) { return f(t) * (y0 + (n * t - i) * (y1 - y0)); }, a, (i + 1) / n);
  }
  return s;
}

TestFunction random_function(RandomSource& r, std::size_t j) {
  switch (j % 4) {
    case 0: {
      std::vector<double> c(2 + r.next_u64() % 5);
      for (auto& v : c) v = r.uniform(-2.0, 2.0);
      return polynomial(c);
    }
    case 1: return cosine(1 + static_cast<int>(r.next_u64() % 5));
    case 2: return sine(1 + static_cast<int>(r.next_u64() % 5));
    default: return exponential(r.uniform(-2.0, 2.0));
  }
}

CriterionResult check_hat_gradient(const VerifyOptions& opt) {
  CriterionResult res{5, "hat gradient", false, "", {}, 0.0};
  RandomSource r(criterion_seed(opt, 5));
  const std::size_t F = opt.quick ? 50 : 200;
  constexpr double h = 1e-6;
  double max_fd = 0.0;
  std::size_t checks = 0;
  for (std::size_t j = 0; j < F; ++j) {
    const auto f = random_function(r, j);
    const std::size_t N = 2 + r.next_u64() % 63;
    std::vector<double> x(N - 1);
    for (auto& v : x) v = r.uniform();
    std::sort(x.begin(), x.end());
    std::vector<double> knots{0.0};
    knots.insert(knots.end(), x.begin(), x.end());
    knots.push_back(1.0);
    for (std::size_t i = 1; i < N; ++i) {
      auto up = knots, dn = knots;
      up[i] += h;
      dn[i] -= h;
      const double fd = (direct_pairing(f, up) - direct_pairing(f, dn)) / (2 * h);
      max_fd = std::max(max_fd, std::abs(hat_gradient(f, N, i) - fd));
      ++checks;
    }
  }
  double max_exact = 0.0;
  const auto one = constant_function(1.0);
  const auto id = identity_function();
  for (const std::size_t N : {2u, 3u, 5u, 8u, 64u, 512u}) {
    const double n = static_cast<double>(N);
    for (std::size_t i = 1; i < N; ++i) {
      max_exact = std::max(max_exact, std::abs(hat_gradient(one, N, i) - 1.0 / n));
      max_exact = std::max(max_exact, std::abs(hat_gradient(id, N, i) - static_cast<double>(i) / (n * n)));
    }
  }
  res.rows.push_back({"random", "max_abs_diff_vs_fd", max_fd, 0.0});
  res.rows.push_back({"const,id", "max_abs_diff_vs_exact", max_exact, 0.0});
  res.passed = max_fd <= 1e-6 && max_exact <= 1e-12;
  res.summary = "max |hat - FD| " + fmt(max_fd, 3) + " over " + std::to_string(checks) +
                " (f, N, i) triples; max deviation from 1/N and i/N^2 " + fmt(max_exact, 3);
  return res;
}

// ---------------------------------------------------------------------------
// 6. Linear-phi identity

CriterionResult check_linear_phi(const VerifyOptions& opt) {
  CriterionResult res{6, "linear-phi divergence", false, "", {}, 0.0};
  const auto corpus = corpus_for(opt);
  std::vector<QuantileStep> gs = corpus.quantiles;
  for (auto& g : generic_quantiles(opt)) gs.push_back(std::move(g));
  const auto id = identity_function();
  RandomSource r(criterion_seed(opt, 6));
  double worst_d = 0.0, worst_c = 0.0;
  std::size_t evals = 0;
  for (const double beta : {0.3, 1.0, 10.0}) {
    for (const auto& g : gs) {
      worst_c = std::max(worst_c, std::abs(v_beta_continuum(g, id, beta) - (beta - 1.0)));
      ++evals;
      for (std::size_t N = 2; N <= 4096; N *= 2) {
        worst_d = std::max(worst_d, std::abs(v_beta_discrete(grid_marginals(g, N).positions(), id, beta) - (beta - 1.0)));
        ++evals;
      }
    }
    for (int k = 0; k < 1000; ++k) {
      const std::size_t N = 2 + r.next_u64() % 255;
      const auto x = fuzz_config(r, N, beta);
      worst_d = std::max(worst_d, std::abs(v_beta_discrete(x.positions(), id, beta) - (beta - 1.0)));
      worst_c = std::max(worst_c, std::abs(v_beta_continuum(embed_quantile(x), id, beta) - (beta - 1.0)));
      evals += 2;
    }
  }
  res.rows.push_back({"discrete", "max_abs_dev_from_beta_minus_1", worst_d, 0.0});
  res.rows.push_back({"continuum", "max_abs_dev_from_beta_minus_1", worst_c, 0.0});
  res.passed = worst_d <= 1e-12 && worst_c <= 1e-12;
  res.summary = "max deviation from beta-1: discrete " + fmt(worst_d, 3) + ", continuum " + fmt(worst_c, 3) +
                " over " + std::to_string(evals) + " evaluations";
  return res;
}

// ---------------------------------------------------------------------------
// 7. Divergence, pairing and norm convergence

CriterionResult check_divergence_convergence(const VerifyOptions& opt) {
  CriterionResult res{7, "divergence convergence", false, "", {}, 0.0};
  const auto corpus = corpus_for(opt);
  std::vector<std::size_t> Ns;
  for (std::size_t N = 16; N <= 4096; N *= 2) Ns.push_back(N);
  const double beta = 1.0 * opt.tamper_beta;
  int sweeps = 0, failed = 0, info_rises = 0;
  double worst_final = 0.0;
  const auto judge = [&](const std::string& tag, const std::string& what, const std::vector<SweepRow>& rows) {
    ++sweeps;
    const bool mono = is_decreasing(rows, 1);
    const double fin = rows.back().error();
    worst_final = std::max(worst_final, fin);
    if (!mono || !(fin < 1e-2)) ++failed;
    res.rows.push_back({tag, what + "_final_error", fin, 0.0});
    if (!mono) res.rows.push_back({tag, what + "_not_monotone", 1.0, 0.0});
  };
  for (std::size_t gi = 0; gi < corpus.quantiles.size(); ++gi) {
    const auto& g = corpus.quantiles[gi];
    for (const auto& phi : corpus.phis) {
      const std::string base = "g" + std::to_string(gi) + " phi=" + phi.name;
      judge(base, "vbeta", v_beta_sweep(g, phi, beta, Ns));
      for (const auto& w : corpus.functionals) {
        const VectorFieldSpec z{w, phi};
        const std::string tag = base + " w=" + w.name();
        judge(tag, "pairing", pairing_sweep(g, w, phi, Ns));
        judge(tag, "field_norm", field_norm_sweep(g, z, Ns));
        const auto div = divergence_sweep(g, z, beta, Ns);
        if (!is_decreasing(div, 1)) ++info_rises;
        res.rows.push_back({tag, "info_divergence_final_error", div.back().error(), 0.0});
      }
    }
  }
  // Informational: generic jump points. Report max N * error, which stays
  // bounded when the error is O(1/N) even though it is not monotone.
  double envelope = 0.0, generic_final = 0.0;
  for (const auto& g : generic_quantiles(opt)) {
    for (const auto& phi : corpus.phis) {
      const auto rows = v_beta_sweep(g, phi, beta, Ns);
      for (const auto& row : rows) envelope = std::max(envelope, static_cast<double>(row.N) * row.error());
      generic_final = std::max(generic_final, rows.back().error());
    }
  }
  res.rows.push_back({"generic", "info_max_N_times_vbeta_error", envelope, 0.0});
  res.rows.push_back({"generic", "info_max_final_vbeta_error", generic_final, 0.0});
  res.passed = failed == 0;
  res.summary = std::to_string(sweeps - failed) + "/" + std::to_string(sweeps) +
                " sweeps (V^beta, pairings, field norms; N=16..4096, beta=" + format_double(beta) +
                ") monotone up to one rise and below 1e-2 at N=4096 (worst final " + fmt(worst_final, 3) +
                "); full divergence non-monotone in " + std::to_string(info_rises) + " sweeps (reported only)";
  return res;
}

// ---------------------------------------------------------------------------
// 8. Discrete integration by parts

CriterionResult check_ibp(const VerifyOptions& opt) {
  CriterionResult res{8, "discrete IBP", false, "", {}, 0.0};
  const auto corpus = corpus_for(opt);
  const SimParams p = model(8, 1.0, opt.seed);
  const std::size_t M = opt.quick ? 100'000 : 1'000'000;
  const auto est = ibp_residuals(corpus.ibp_pairs, p, M, RandomSource(criterion_seed(opt, 8)),
                                 McOptions{opt.jobs}, p.beta * opt.tamper_beta);
  std::size_t bad = 0;
  double max_z = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    const auto& pr = corpus.ibp_pairs[k];
    const double z = std::abs(est[k].value) / est[k].std_error;
    max_z = std::max(max_z, z);
    if (!(z < 3.0)) ++bad;
    res.rows.push_back({"u=" + pr.u.name() + " w=" + pr.zeta.w.name() + " phi=" + pr.zeta.phi.name,
                        "mean_residual", est[k].value, est[k].std_error});
  }
  res.passed = bad == 0 && !est.empty();
  res.summary = std::to_string(est.size() - bad) + "/" + std::to_string(est.size()) +
                " pairs with |mean residual| < 3 SE (N=8, beta=1, " + std::to_string(M) +
                " samples; max |z| " + fmt(max_z, 3) + ")";
  return res;
}

// ---------------------------------------------------------------------------
// 9. Projection norms

CriterionResult check_projection(const VerifyOptions& opt) {
  CriterionResult res{9, "projection norms", false, "", {}, 0.0};
  const auto corpus = corpus_for(opt);
  const std::vector<std::size_t> Ns = {4, 8, 16, 32, 64, 512};
  const double beta = 1.0;
  const double beta_ref = beta * opt.tamper_beta;
  const std::size_t M = opt.quick ? 20'000 : 100'000;
  std::vector<CylinderFunctional> us;
  bool constant_ok = true;
  for (const auto& u : corpus.functionals) {
    if (u.is_constant()) {
      const auto e = projection_norm(u, 16, beta, 100, RandomSource(criterion_seed(opt, 9)));
      constant_ok = constant_ok && std::abs(e.value - std::abs(u.scale())) <= 1e-12;
      res.rows.push_back({"u=" + u.name(), "norm_N16", e.value, e.std_error});
    } else {
      us.push_back(u);
    }
  }
  const auto sweeps = projection_sweeps(us, Ns, beta, M, RandomSource(criterion_seed(opt, 9), 1), McOptions{opt.jobs});
  std::size_t failures = 0, checks = 0;
  for (std::size_t j = 0; j < us.size(); ++j) {
    const auto& sw = sweeps[j];
    const std::string tag = "u=" + us[j].name();
    for (std::size_t k = 0; k < Ns.size(); ++k) {
      res.rows.push_back({tag, "norm_N" + std::to_string(Ns[k]), sw.norms[k].value, sw.norms[k].std_error});
    }
    // Non-decreasing in N (up to sampling noise on the coupled differences).
    for (std::size_t k = 0; k + 1 < Ns.size(); ++k) {
      ++checks;
      if (sw.norms[k + 1].value < sw.norms[k].value - 3.0 * sw.step_stderr[k]) {
        ++failures;
        res.rows.push_back({tag, "decrease_at_N" + std::to_string(Ns[k + 1]), 1.0, 0.0});
      }
    }
    const std::size_t last = Ns.size() - 1, ref = Ns.size() - 2;
    double gap_se = 0.0;
    for (std::size_t k = ref; k < last; ++k) gap_se += sw.step_stderr[k];
    ++checks;
    const double gap_lo = sw.norms[last].value - sw.norms[0].value;
    const double gap_hi = sw.norms[last].value - sw.norms[ref].value;
    if (!(gap_hi < gap_lo) || gap_hi < -3.0 * gap_se) ++failures;
    // Linear functionals have a closed form for the limit.
    if (us[j].factors().size() == 1 && us[j].factors()[0].power == 1) {
      const double exact = std::abs(us[j].scale()) * linear_norm_exact(us[j].factors()[0].f, beta_ref);
      ++checks;
      const bool ok = std::abs(sw.norms[last].value - exact) <= 3.0 * sw.norms[last].std_error;
      if (!ok) ++failures;
      res.rows.push_back({tag, "exact_limit", exact, 0.0});
    }
  }
  res.passed = failures == 0 && constant_ok;
  res.summary = std::to_string(checks - failures) + "/" + std::to_string(checks) +
                " checks: norms non-decreasing over N=4..512 within 3 SE of each coupled step, gap to N=512 "
                "shrinking, linear limits within 3 SE of the closed form" +
                (constant_ok ? "; constants exact" : "; constant functional WRONG");
  return res;
}

// ---------------------------------------------------------------------------
// 10. Gibbs correspondence

CriterionResult check_gibbs(const VerifyOptions& opt) {
  CriterionResult res{10, "Gibbs correspondence", false, "", {}, 0.0};
  RandomSource r(criterion_seed(opt, 10));
  double worst = 0.0, control = std::numeric_limits<double>::infinity();
  for (const std::size_t N : {2u, 4u, 8u, 16u, 64u, 256u}) {
    for (const double beta : {0.3, 1.0, 10.0, static_cast<double>(N)}) {
      std::vector<ParticleConfig> xs;
      for (int k = 0; k < 1000; ++k) {
        std::vector<double> x(N - 1);
        for (auto& v : x) v = r.uniform_open_low();
        std::sort(x.begin(), x.end());
        bool distinct = true;
        for (std::size_t i = 1; i < x.size(); ++i) distinct = distinct && x[i] > x[i - 1];
        if (distinct && (x.empty() || x.back() < 1.0)) xs.emplace_back(std::move(x));
      }
      const double dev = gibbs_consistency(xs, beta, beta * opt.tamper_beta);
      const double ctl = gibbs_consistency(xs, beta, beta * 1.5 + 0.5);
      worst = std::max(worst, dev);
      if (N > 2) control = std::min(control, ctl);
      res.rows.push_back({label(N, beta), "max_minus_min_logq_plus_H", dev, 0.0});
      res.rows.push_back({label(N, beta), "control_mismatched_beta", ctl, 0.0});
    }
  }
  const bool control_ok = control > 1e-3;
  res.passed = worst < 1e-9 && control_ok;
  res.summary = "log q_N + H_N constant to " + fmt(worst, 3) +
                " over 24 (N, beta) cells (tolerance 1e-9); mismatched-beta control spread >= " + fmt(control, 3) +
                (control_ok ? "" : " (control FAILED to detect)");
  return res;
}

// ---------------------------------------------------------------------------
// 11. Gap regimes

CriterionResult check_gaps(const VerifyOptions& opt) {
  CriterionResult res{11, "gap regimes", false, "", {}, 0.0};
  const std::size_t M = opt.quick ? 20'000 : 100'000;
  const double threshold = 0.01;
  const RandomSource base(criterion_seed(opt, 11));
  const double betas[] = {0.3, 1.0, 10.0};
  std::vector<GapStatistics> st;
  bool oracle_ok = true;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto p = model(4, betas[b], opt.seed);
    auto ref = p;
    ref.beta = betas[b] * opt.tamper_beta;
    const auto samples = draw_samples(p, M, base.derive(b), opt.jobs);
    st.push_back(gap_statistics(samples, ref, threshold));
    const auto& g = st.back();
    oracle_ok = oracle_ok && std::abs(g.empirical - g.oracle) <= 3.0 * g.std_error;
    res.rows.push_back({label(4, betas[b]), "fraction_gaps_below_0.01", g.empirical, g.std_error});
    res.rows.push_back({label(4, betas[b]), "beta_cdf_oracle", g.oracle, 0.0});
  }
  bool ordered = true;
  for (std::size_t b = 0; b + 1 < 3; ++b) {
    const double sep = st[b].empirical - st[b + 1].empirical;
    ordered = ordered && sep > 3.0 * std::hypot(st[b].std_error, st[b + 1].std_error);
  }
  res.passed = ordered && oracle_ok;
  res.summary = "P(gap <= 0.01) at N=4: " + fmt(st[0].empirical, 4) + " > " + fmt(st[1].empirical, 4) + " > " +
                fmt(st[2].empirical, 4) + (ordered ? " (separated by > 3 SE)" : " (ordering NOT resolved)") +
                "; oracle agreement " + (oracle_ok ? "within 3 SE" : "FAILED");
  return res;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"stationarity", "generator", "ibp", "divergence",
                                                 "projection", "martingale", "all"};
  return names;
}

bool is_suite(std::string_view name) {
  const auto& n = suite_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::vector<int> suite_criteria(std::string_view suite) {
  if (suite == "stationarity") return {1, 10, 11};
  if (suite == "generator") return {2};
  if (suite == "martingale") return {3, 4};
  if (suite == "divergence") return {5, 6, 7};
  if (suite == "ibp") return {8};
  if (suite == "projection") return {9};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  throw InvalidArgument("unknown suite '" + std::string(suite) + "'");
}

CriterionResult run_criterion(int id, const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  CriterionResult res;
  switch (id) {
    case 1: res = check_stationarity(opt); break;
    case 2: res = check_generator(opt); break;
    case 3: return run_martingale_criteria(opt)[0];
    case 4: return run_martingale_criteria(opt)[1];
    case 5: res = check_hat_gradient(opt); break;
    case 6: res = check_linear_phi(opt); break;
    case 7: res = check_divergence_convergence(opt); break;
    case 8: res = check_ibp(opt); break;
    case 9: res = check_projection(opt); break;
    case 10: res = check_gibbs(opt); break;
    case 11: res = check_gaps(opt); break;
    default: throw InvalidArgument("criterion id must be in 1..11");
  }
  res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

std::vector<CriterionResult> run_suite(std::string_view suite, const VerifyOptions& opt) {
  const auto ids = suite_criteria(suite);
  std::vector<CriterionResult> out;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] == 3 && k + 1 < ids.size() && ids[k + 1] == 4) {
      for (auto& r : run_martingale_criteria(opt)) out.push_back(std::move(r));
      ++k;
    } else {
      out.push_back(run_criterion(ids[k], opt));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<CriterionResult>& results,
                      const std::string& comment) {
  out << "# " << comment << '\n' << "replica,quantity,value,stderr\n";
  for (const auto& r : results) {
    const std::string prefix = "c" + std::to_string(r.id) + " ";
    out << csv_field(prefix + "verdict") << ',' << csv_field(r.name) << ',' << (r.passed ? 1 : 0) << ",0\n";
    for (const auto& row : r.rows) {
      out << csv_field(prefix + row.replica) << ',' << csv_field(row.quantity) << ',' << format_double(row.value)
          << ',' << format_double(row.std_error) << '\n';
    }
  }
}

void write_summary(std::ostream& out, const std::vector<CriterionResult>& results) {
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.id << ' ' << r.name << ": " << r.summary << " [" << fmt(r.seconds, 3)
        << " s]\n";
  }
}

}  // namespace wdiff
