#include "wdiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "wdiff/errors.hpp"

namespace wdiff {

double drift_functional(const EmpiricalMeasure& mu, const TestFunction& f, double beta) {
  const double curvature = mu.integrate([&](double a) { return f.d2(a); });
  double gap_sum = 0.0;
  for (const auto& I : gaps(mu)) {
    gap_sum += 0.5 * (f.d2(I.left) + f.d2(I.right)) - difference_quotient(f, I.left, I.right, 1);
  }
  return beta * curvature + gap_sum - 0.5 * (f.d2(0.0) + f.d2(1.0));
}

std::vector<double> martingale_series(const SimulationPath& path, const TestFunction& f, double beta) {
  std::vector<double> m(path.times.size(), 0.0);
  if (m.empty()) return m;
  const auto nu0 = empirical_measure(path.states[0], true);
  const double f0 = nu0.integrate(f.f);
  double prev_drift = drift_functional(nu0, f, beta);
  double integral = 0.0;
  for (std::size_t k = 1; k < m.size(); ++k) {
    const auto nu = empirical_measure(path.states[k], true);
    const double drift = drift_functional(nu, f, beta);
    integral += 0.5 * (prev_drift + drift) * (path.times[k] - path.times[k - 1]);
    m[k] = nu.integrate(f.f) - f0 - integral;
    prev_drift = drift;
  }
  return m;
}

namespace {

// Predicted QV density 2 <f'^2, nu>.
std::vector<double> qv_density(const SimulationPath& path, const TestFunction& f) {
  std::vector<double> q;
  q.reserve(path.states.size());
  for (const auto& x : path.states) {
    const auto nu = empirical_measure(x, true);
    q.push_back(2.0 * nu.integrate([&](double a) { return f.d1(a) * f.d1(a); }));
  }
  return q;
}

QvResult qv_range(const SimulationPath& path, const std::vector<double>& m,
                  const std::vector<double>& dens, std::size_t from, std::size_t to) {
  QvResult r;
  for (std::size_t k = from + 1; k <= to; ++k) {
    const double dm = m[k] - m[k - 1];
    r.realized += dm * dm;
    r.predicted += 0.5 * (dens[k] + dens[k - 1]) * (path.times[k] - path.times[k - 1]);
  }
  return r;
}

}  // namespace

QvResult qv_check(const SimulationPath& path, const TestFunction& f, double beta) {
  if (path.times.size() < 2) return {};
  const auto m = martingale_series(path, f, beta);
  const auto dens = qv_density(path, f);
  return qv_range(path, m, dens, 0, path.times.size() - 1);
}

std::vector<QvWindow> qv_windows(const SimulationPath& path, const TestFunction& f, double beta,
                                 std::size_t windows) {
  const std::size_t steps = path.times.size() > 0 ? path.times.size() - 1 : 0;
  if (windows == 0 || steps < windows) throw InvalidArgument("qv_windows: fewer recording steps than windows");
  const auto m = martingale_series(path, f, beta);
  const auto dens = qv_density(path, f);
  const double sup = f.sup_norm(1);
  const std::size_t per = steps / windows;
  std::vector<QvWindow> out;
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t from = w * per;
    const std::size_t to = from + per;
    QvWindow win;
    win.start = path.times[from];
    win.length = path.times[to] - path.times[from];
    win.qv = qv_range(path, m, dens, from, to);
    win.bound = 2.0 * win.length * sup * sup;
    out.push_back(win);
  }
  return out;
}

GeneratorValue generator_apply(const ParticleConfig& x, const TestFunction& f, const SimParams& params) {
  const std::size_t N = x.N();
  if (N < 2) throw InvalidArgument("generator_apply: needs at least one particle");
  const double n = static_cast<double>(N);
  const double beta = params.beta;
  double sum_q = 0.0;
  double interior = 0.0;
  double q_last = 0.0;
  for (std::size_t i = 1; i <= N; ++i) {
    const double q = difference_quotient(f, x.x(i - 1), x.x(i), 1);
    sum_q += q;
    if (i < N) {
      interior += f.d2(x.x(i)) - q;
    } else {
      q_last = q;
    }
  }
  GeneratorValue g;
  g.value = beta / (n - 1.0) * sum_q + n / (n - 1.0) * interior - n / (n - 1.0) * q_last;
  g.bound = f.sup_norm(2) * n * (beta + 1.0) / (n - 1.0) + f.sup_norm(3) * n / (n - 1.0);
  return g;
}

double generator_direct(const ParticleConfig& x, const TestFunction& f, const SimParams& params) {
  const std::size_t N = x.N();
  const double n = static_cast<double>(N);
  const double c = params.beta / n - 1.0;
  double s = 0.0;
  for (std::size_t i = 1; i < N; ++i) {
    const double di = x.spacing(i);
    const double dn = x.spacing(i + 1);
    if (!(di > 0.0) || !(dn > 0.0)) throw DegenerateSpacing(di > 0.0 ? i + 1 : i);
    s += c * (1.0 / di - 1.0 / dn) * f.d1(x.x(i)) + f.d2(x.x(i));
  }
  return n / (n - 1.0) * s;
}

std::size_t MarginalReport::failures() const {
  return static_cast<std::size_t>(std::count_if(coordinates.begin(), coordinates.end(),
                                                [&](const KsResult& r) { return r.p_value < level; }));
}

double MarginalReport::failure_fraction() const {
  return coordinates.empty() ? 0.0
                             : static_cast<double>(failures()) / static_cast<double>(coordinates.size());
}

MarginalReport marginal_test(std::span<const ParticleConfig> samples, const SimParams& params, double level) {
  MarginalReport rep;
  rep.level = level;
  const std::size_t N = params.N;
  const double n = static_cast<double>(N);
  std::vector<double> column(samples.size());
  for (std::size_t i = 1; i < N; ++i) {
    for (std::size_t s = 0; s < samples.size(); ++s) {
      if (samples[s].N() != N) throw InvalidArgument("marginal_test: sample size does not match params.N");
      column[s] = samples[s].x(i);
    }
    const double a = static_cast<double>(i) * params.beta / n;
    const double b = static_cast<double>(N - i) * params.beta / n;
    rep.coordinates.push_back(ks_test_beta(column, a, b));
  }
  return rep;
}

GapStatistics gap_statistics(std::span<const ParticleConfig> samples, const SimParams& params,
                             double threshold) {
  if (!(threshold > 0.0) || threshold > 1.0) throw InvalidArgument("gap_statistics: threshold must lie in (0,1]");
  Accumulator acc;
  for (const auto& x : samples) {
    std::size_t hits = 0;
    for (std::size_t i = 1; i <= x.N(); ++i) hits += x.spacing(i) <= threshold;
    acc.add(static_cast<double>(hits) / static_cast<double>(x.N()));
  }
  GapStatistics g;
  g.empirical = acc.mean();
  g.std_error = acc.stderr_mean();
  const double alpha = params.alpha();
  g.oracle = params.N == 1 ? (threshold >= 1.0 ? 1.0 : 0.0)
                           : beta_cdf(threshold, alpha, params.beta - alpha);
  return g;
}

}  // namespace wdiff
