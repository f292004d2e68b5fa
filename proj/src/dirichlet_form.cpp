#include "wdiff/dirichlet_form.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "wdiff/errors.hpp"
#include "wdiff/parallel.hpp"
#include "wdiff/quadrature.hpp"

namespace wdiff {

namespace {

/// int_a^b f, exact when an antiderivative is available.
double integral(const TestFunction& f, double a, double b) {
  if (f.antiderivative) return f.antiderivative(b) - f.antiderivative(a);
  return integrate_gl16(f.f, a, b);
}

/// Split `samples` into fixed blocks, each driven by rng.derive(block), and
/// merge the per-block accumulators in block order.
template <class Body>
std::vector<Accumulator> run_blocks(std::size_t samples, std::size_t outputs,
                                    const RandomSource& rng, const McOptions& opt, Body&& body) {
  const std::size_t bs = std::max<std::size_t>(1, opt.block_size);
  const std::size_t blocks = (samples + bs - 1) / bs;
  std::vector<std::vector<Accumulator>> partial(blocks, std::vector<Accumulator>(outputs));
  parallel_for(blocks, opt.jobs, [&](std::size_t b) {
    RandomSource brng = rng.derive(b);
    const std::size_t count = std::min(bs, samples - b * bs);
    body(brng, count, std::span<Accumulator>(partial[b]));
  });
  std::vector<Accumulator> total(outputs);
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < outputs; ++k) total[k].merge(p[k]);
  }
  return total;
}

SimParams sampling_params(std::size_t N, double beta) {
  SimParams p;
  p.N = N;
  p.beta = beta;
  return p;
}

std::vector<double> factor_values(const CylinderFunctional& u, const QuantileStep& g) {
  std::vector<double> l;
  l.reserve(u.factors().size());
  for (const auto& fac : u.factors()) l.push_back(pairing(fac.f, g));
  return l;
}

}  // namespace

PiecewiseLinearQuantile::PiecewiseLinearQuantile(const ParticleConfig& x) {
  knots_.reserve(x.N() + 1);
  for (std::size_t i = 0; i <= x.N(); ++i) knots_.push_back(x.x(i));
}

double PiecewiseLinearQuantile::operator()(double t) const {
  const std::size_t n = N();
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double s = t * static_cast<double>(n);
  const auto i = std::min(static_cast<std::size_t>(s), n - 1);
  const double frac = s - static_cast<double>(i);
  return knots_[i] + frac * (knots_[i + 1] - knots_[i]);
}

PiecewiseLinearQuantile condexp_quantile(const ParticleConfig& x, std::size_t N) {
  if (x.N() != N) throw InvalidArgument("condexp_quantile: config has " + std::to_string(x.n_particles()) +
                                        " particles, expected N-1 = " + std::to_string(N - 1));
  return PiecewiseLinearQuantile(x);
}

double pairing(const TestFunction& f, const QuantileStep& g) {
  double s = 0.0;
  double t = 0.0;
  for (const auto& p : g.pieces()) {
    const double end = t + p.length;
    if (p.value != 0.0) s += p.value * integral(f, t, std::min(end, 1.0));
    t = end;
  }
  return s;
}

double pairing(const TestFunction& f, const PiecewiseLinearQuantile& g) {
  const auto proj = project_linear(f, g.N());
  return proj(g.knots().subspan(1, g.N() - 1));
}

double hat_gradient(const TestFunction& f, std::size_t N, std::size_t i) {
  if (i < 1 || i >= N) throw InvalidArgument("hat_gradient: index must lie in 1..N-1");
  const double n = static_cast<double>(N);
  const double c = static_cast<double>(i) / n;
  const double h = 1.0 / n;
  const auto left = [&](double t) { return f(t) * (1.0 - (c - t) * n); };
  const auto right = [&](double t) { return f(t) * (1.0 - (t - c) * n); };
  return integrate_gl16(left, c - h, c) + integrate_gl16(right, c, c + h);
}

double ProjectedLinear::operator()(std::span<const double> x) const {
  double s = offset;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
  return s;
}

ProjectedLinear project_linear(const TestFunction& f, std::size_t N) {
  if (N < 1) throw InvalidArgument("project_linear: N must be >= 1");
  ProjectedLinear p;
  p.weights.resize(N - 1);
  for (std::size_t i = 1; i < N; ++i) p.weights[i - 1] = hat_gradient(f, N, i);
  const double n = static_cast<double>(N);
  const double a = (n - 1.0) / n;
  p.offset = integrate_gl16([&](double t) { return f(t) * (t - a) * n; }, a, 1.0);
  return p;
}

CylinderFunctional::CylinderFunctional(std::vector<Factor> factors, double scale)
    : factors_(std::move(factors)), scale_(scale) {
  for (const auto& fac : factors_) {
    if (fac.power < 1) throw InvalidArgument("cylinder functional powers must be positive");
  }
  name_ = factors_.empty() || scale_ != 1.0 ? format_double(scale_) : "";
  for (const auto& fac : factors_) {
    if (!name_.empty()) name_ += "*";
    name_ += fac.f.name;
    if (fac.power != 1) name_ += "^" + std::to_string(fac.power);
  }
}

CylinderFunctional CylinderFunctional::constant(double c) { return CylinderFunctional({}, c); }

CylinderFunctional CylinderFunctional::linear(TestFunction f) {
  return CylinderFunctional({Factor{std::move(f), 1}}, 1.0);
}

double CylinderFunctional::value(std::span<const double> l) const {
  double v = scale_;
  for (std::size_t i = 0; i < factors_.size(); ++i) v *= std::pow(l[i], factors_[i].power);
  return v;
}

void CylinderFunctional::partials(std::span<const double> l, std::span<double> out) const {
  const std::size_t m = factors_.size();
  for (std::size_t i = 0; i < m; ++i) {
    double v = scale_ * factors_[i].power * std::pow(l[i], factors_[i].power - 1);
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) v *= std::pow(l[j], factors_[j].power);
    }
    out[i] = v;
  }
}

double CylinderFunctional::operator()(const QuantileStep& g) const {
  return value(factor_values(*this, g));
}

double CylinderFunctional::operator()(const PiecewiseLinearQuantile& g) const {
  std::vector<double> l;
  for (const auto& fac : factors_) l.push_back(pairing(fac.f, g));
  return value(l);
}

CylinderFunctional parse_cylinder(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto star = text.find('*', start);
    parts.push_back(text.substr(start, star == text.npos ? text.npos : star - start));
    if (star == text.npos) break;
    start = star + 1;
  }
  double scale = 1.0;
  std::vector<Factor> factors;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto part = parts[k];
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (part.empty()) throw InvalidArgument("empty factor in cylinder functional '" + std::string(text) + "'");
    if (k == 0 && (std::isdigit(static_cast<unsigned char>(part.front())) || part.front() == '-' ||
                   part.front() == '.')) {
      try {
        std::size_t used = 0;
        scale = std::stod(std::string(part), &used);
        if (used != part.size()) throw InvalidArgument("bad scale");
      } catch (const std::exception&) {
        throw InvalidArgument("bad scale '" + std::string(part) + "' in cylinder functional");
      }
      continue;
    }
    int power = 1;
    const auto caret = part.rfind('^');
    if (caret != part.npos) {
      try {
        power = std::stoi(std::string(part.substr(caret + 1)));
      } catch (const std::exception&) {
        throw InvalidArgument("bad power in factor '" + std::string(part) + "'");
      }
      part = part.substr(0, caret);
    }
    factors.push_back(Factor{parse_test_function(part), power});
  }
  return CylinderFunctional(std::move(factors), scale);
}

GridFunctional::GridFunctional(const CylinderFunctional& u, std::size_t N)
    : u_(u), N_(N), l_(u.factors().size()), c_(u.factors().size()) {
  for (const auto& fac : u_.factors()) proj_.push_back(project_linear(fac.f, N));
}

double GridFunctional::value(std::span<const double> x) const {
  for (std::size_t i = 0; i < proj_.size(); ++i) l_[i] = proj_[i](x);
  return u_.value(l_);
}

double GridFunctional::value_and_gradient(std::span<const double> x, std::span<double> grad) const {
  const double v = value(x);
  std::fill(grad.begin(), grad.end(), 0.0);
  if (proj_.empty()) return v;
  u_.partials(l_, c_);
  for (std::size_t i = 0; i < proj_.size(); ++i) {
    const auto& w = proj_[i].weights;
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += c_[i] * w[j];
  }
  return v;
}

void VectorFieldSpec::validate() const {
  if (std::abs(phi(0.0)) > 1e-12 || std::abs(phi(1.0)) > 1e-12) {
    throw InvalidArgument("vector field: phi must vanish at 0 and 1 (" + phi.name + ")");
  }
}

double v_beta_discrete(std::span<const double> x, const TestFunction& phi, double beta) {
  const std::size_t N = x.size() + 1;
  const double alpha = beta / static_cast<double>(N);
  double quotients = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double next = i + 1 < N ? x[i] : 1.0;
    quotients += difference_quotient(phi, prev, next);
    prev = next;
  }
  double slopes = 0.0;
  for (const double v : x) slopes += phi.d1(v);
  return (alpha - 1.0) * quotients + slopes;
}

double v_beta_discrete(const ParticleConfig& x, const TestFunction& phi, const SimParams& params) {
  return v_beta_discrete(x.positions(), phi, params.beta);
}

double v_beta_continuum(const QuantileStep& g, const TestFunction& phi, double beta) {
  const auto c = g.canonical();
  const auto pieces = c.pieces();
  double jumps = 0.0;
  for (std::size_t j = 1; j < pieces.size(); ++j) {
    const double lo = pieces[j - 1].value;
    const double hi = pieces[j].value;
    jumps += 0.5 * (phi.d1(hi) + phi.d1(lo)) - difference_quotient(phi, lo, hi);
  }
  double integral_term = 0.0;
  for (const auto& p : pieces) integral_term += p.length * phi.d1(p.value);
  return jumps + beta * integral_term - 0.5 * (phi.d1(0.0) + phi.d1(1.0));
}

double gradient_pairing_discrete(const ParticleConfig& x, const CylinderFunctional& w,
                                 const TestFunction& phi) {
  if (w.is_constant()) return 0.0;
  GridFunctional gw(w, x.N());
  std::vector<double> grad(x.n_particles());
  gw.value_and_gradient(x.positions(), grad);
  double s = 0.0;
  const auto pos = x.positions();
  for (std::size_t j = 0; j < grad.size(); ++j) s += grad[j] * phi(pos[j]);
  return s;
}

double gradient_pairing_continuum(const QuantileStep& g, const CylinderFunctional& w,
                                  const TestFunction& phi) {
  if (w.is_constant()) return 0.0;
  const auto l = factor_values(w, g);
  std::vector<double> c(l.size());
  w.partials(l, c);
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    double t = 0.0;
    double inner = 0.0;
    for (const auto& p : g.pieces()) {
      inner += phi(p.value) * integral(w.factors()[i].f, t, std::min(t + p.length, 1.0));
      t += p.length;
    }
    s += c[i] * inner;
  }
  return s;
}

double divergence_discrete(const ParticleConfig& x, const VectorFieldSpec& zeta,
                           const SimParams& params) {
  GridFunctional gw(zeta.w, x.N());
  std::vector<double> grad(x.n_particles());
  const double w = gw.value_and_gradient(x.positions(), grad);
  double pair = 0.0;
  const auto pos = x.positions();
  for (std::size_t j = 0; j < grad.size(); ++j) pair += grad[j] * zeta.phi(pos[j]);
  return w * v_beta_discrete(pos, zeta.phi, params.beta) + pair;
}

double divergence_continuum(const QuantileStep& g, const VectorFieldSpec& zeta, double beta) {
  return zeta.w(g) * v_beta_continuum(g, zeta.phi, beta) +
         gradient_pairing_continuum(g, zeta.w, zeta.phi);
}

double field_norm_sq_discrete(const ParticleConfig& x, const VectorFieldSpec& zeta) {
  GridFunctional gw(zeta.w, x.N());
  const double w = gw.value(x.positions());
  double s = 0.0;
  for (const double v : x.positions()) s += zeta.phi(v) * zeta.phi(v);
  return w * w * s / static_cast<double>(x.N());
}

double field_norm_sq_continuum(const QuantileStep& g, const VectorFieldSpec& zeta) {
  const double w = zeta.w(g);
  double s = 0.0;
  for (const auto& p : g.pieces()) s += p.length * zeta.phi(p.value) * zeta.phi(p.value);
  return w * w * s;
}

ParticleConfig grid_marginals(const QuantileStep& g, std::size_t N) {
  if (N < 1) throw InvalidArgument("grid_marginals: N must be >= 1");
  std::vector<double> x(N - 1);
  for (std::size_t i = 1; i < N; ++i) x[i - 1] = g(static_cast<double>(i) / static_cast<double>(N));
  return ParticleConfig(std::move(x));
}

Estimate form_estimate_discrete(const CylinderFunctional& u, const SimParams& params,
                                std::size_t samples, const RandomSource& rng,
                                const McOptions& opt) {
  if (samples < 100 && !u.is_constant()) throw InvalidArgument("form_estimate_discrete: samples must be >= 100");
  if (u.is_constant()) return {0.0, 0.0};
  const double n = static_cast<double>(params.N);
  const auto acc = run_blocks(samples, 1, rng, opt, [&](RandomSource& r, std::size_t count, auto out) {
    GridFunctional gu(u, params.N);
    std::vector<double> grad(params.N - 1);
    for (std::size_t s = 0; s < count; ++s) {
      const auto x = sample_config(params, r);
      gu.value_and_gradient(x.positions(), grad);
      double sq = 0.0;
      for (const double v : grad) sq += v * v;
      out[0].add(n * sq);
    }
  });
  return estimate(acc[0]);
}

Estimate form_estimate_continuum(const CylinderFunctional& u, std::size_t resolution,
                                 std::size_t samples, double beta, const RandomSource& rng,
                                 const McOptions& opt) {
  if (resolution < 2) throw InvalidArgument("form_estimate_continuum: resolution must be >= 2");
  if (u.is_constant()) return {0.0, 0.0};
  if (samples < 100) throw InvalidArgument("form_estimate_continuum: samples must be >= 100");
  const std::size_t m = u.factors().size();
  std::vector<double> gram(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const auto& fi = u.factors()[i].f;
      const auto& fj = u.factors()[j].f;
      gram[i * m + j] = gram[j * m + i] =
          integrate_composite([&](double t) { return fi(t) * fj(t); }, 0.0, 1.0, 32);
    }
  }
  const auto params = sampling_params(resolution, beta);
  const auto acc = run_blocks(samples, 1, rng, opt, [&](RandomSource& r, std::size_t count, auto out) {
    std::vector<double> c(m);
    for (std::size_t s = 0; s < count; ++s) {
      const auto g = embed_quantile(sample_config(params, r));
      const auto l = factor_values(u, g);
      u.partials(l, c);
      double q = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) q += c[i] * c[j] * gram[i * m + j];
      }
      out[0].add(q);
    }
  });
  return estimate(acc[0]);
}

std::vector<Estimate> ibp_residuals(std::span<const IbpPair> pairs, const SimParams& params,
                                    std::size_t samples, const RandomSource& rng,
                                    const McOptions& opt, std::optional<double> model_beta) {
  for (const auto& p : pairs) p.zeta.validate();
  const double div_beta = model_beta.value_or(params.beta);
  const std::size_t N = params.N;
  const double n = static_cast<double>(N);
  const auto acc = run_blocks(samples, pairs.size(), rng, opt, [&](RandomSource& r, std::size_t count, auto out) {
    std::vector<GridFunctional> us, ws;
    for (const auto& p : pairs) {
      us.emplace_back(p.u, N);
      ws.emplace_back(p.zeta.w, N);
    }
    std::vector<double> gu(N - 1), gw(N - 1), phis(N - 1);
    for (std::size_t s = 0; s < count; ++s) {
      const auto x = sample_config(params, r);
      const auto pos = x.positions();
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& phi = pairs[k].zeta.phi;
        for (std::size_t j = 0; j < pos.size(); ++j) phis[j] = phi(pos[j]);
        const double u = us[k].value_and_gradient(pos, gu);
        const double w = ws[k].value_and_gradient(pos, gw);
        double grad_dot_zeta = 0.0;
        double grad_w_dot_phi = 0.0;
        for (std::size_t j = 0; j < pos.size(); ++j) {
          grad_dot_zeta += gu[j] * phis[j];
          grad_w_dot_phi += gw[j] * phis[j];
        }
        const double div = w * v_beta_discrete(pos, phi, div_beta) + grad_w_dot_phi;
        out[k].add((w * grad_dot_zeta + u * div) / n);
      }
    }
  });
  std::vector<Estimate> res;
  for (const auto& a : acc) res.push_back(estimate(a));
  return res;
}

Estimate ibp_residual_discrete(const CylinderFunctional& u, const VectorFieldSpec& zeta,
                               const SimParams& params, std::size_t samples,
                               const RandomSource& rng, const McOptions& opt) {
  const IbpPair pair{u, zeta};
  return ibp_residuals(std::span<const IbpPair>(&pair, 1), params, samples, rng, opt)[0];
}

Estimate projection_norm(const CylinderFunctional& u, std::size_t N, double beta,
                         std::size_t samples, const RandomSource& rng, const McOptions& opt) {
  const std::size_t Ns[] = {N};
  return projection_sweep(u, Ns, beta, samples, rng, opt).norms[0];
}

ProjectionSweep projection_sweep(const CylinderFunctional& u, std::span<const std::size_t> Ns,
                                 double beta, std::size_t samples, const RandomSource& rng,
                                 const McOptions& opt) {
  return projection_sweeps(std::span<const CylinderFunctional>(&u, 1), Ns, beta, samples, rng, opt)[0];
}

std::vector<ProjectionSweep> projection_sweeps(std::span<const CylinderFunctional> us,
                                               std::span<const std::size_t> Ns, double beta,
                                               std::size_t samples, const RandomSource& rng,
                                               const McOptions& opt) {
  if (Ns.empty()) throw InvalidArgument("projection_sweep: no grid sizes");
  if (samples < 100) throw InvalidArgument("projection_sweep: samples must be >= 100");
  const std::size_t finest = *std::max_element(Ns.begin(), Ns.end());
  for (const auto N : Ns) {
    if (N < 1 || finest % N != 0) throw InvalidArgument("projection_sweep: every N must divide the largest");
  }
  const std::size_t K = Ns.size();
  const std::size_t U = us.size();
  const std::size_t per = 2 * K - 1;
  const auto params = sampling_params(finest, beta);
  // Per functional: u_{N_k}^2 for each k, then u_{N_{k+1}}^2 - u_{N_k}^2.
  const auto acc = run_blocks(samples, U * per, rng, opt, [&](RandomSource& r, std::size_t count, auto out) {
    std::vector<std::vector<GridFunctional>> fs(U);
    for (std::size_t j = 0; j < U; ++j) {
      for (std::size_t k = 0; k < K; ++k) fs[j].emplace_back(us[j], Ns[k]);
    }
    std::vector<std::vector<double>> sub(K);
    for (std::size_t k = 0; k < K; ++k) sub[k].resize(Ns[k] - 1);
    std::vector<double> sq(K);
    for (std::size_t s = 0; s < count; ++s) {
      const auto x = sample_config(params, r);
      const auto pos = x.positions();
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t stride = finest / Ns[k];
        for (std::size_t i = 1; i < Ns[k]; ++i) sub[k][i - 1] = pos[i * stride - 1];
      }
      for (std::size_t j = 0; j < U; ++j) {
        for (std::size_t k = 0; k < K; ++k) {
          const double v = fs[j][k].value(sub[k]);
          sq[k] = v * v;
          out[j * per + k].add(sq[k]);
        }
        for (std::size_t k = 0; k + 1 < K; ++k) out[j * per + K + k].add(sq[k + 1] - sq[k]);
      }
    }
  });
  std::vector<ProjectionSweep> all;
  for (std::size_t j = 0; j < U; ++j) {
    ProjectionSweep res;
    res.Ns.assign(Ns.begin(), Ns.end());
    for (std::size_t k = 0; k < K; ++k) {
      const double m = acc[j * per + k].mean();
      const double root = std::sqrt(std::max(m, 0.0));
      res.norms.push_back({root, root > 0.0 ? acc[j * per + k].stderr_mean() / (2.0 * root) : 0.0});
    }
    // d sqrt(m) = dm / (sqrt(m_k) + sqrt(m_{k+1})) exactly.
    for (std::size_t k = 0; k + 1 < K; ++k) {
      const double root = res.norms[k].value + res.norms[k + 1].value;
      res.step_stderr.push_back(root > 0.0 ? acc[j * per + K + k].stderr_mean() / root : 0.0);
    }
    all.push_back(std::move(res));
  }
  return all;
}

double linear_norm_exact(const TestFunction& f, double beta) {
  // 2 int_0^1 f(t) (beta t + 1)/(beta + 1) int_0^t s f(s) ds dt
  const auto outer = [&](double t) {
    const double inner = integrate_gl16([&](double s) { return s * f(s); }, 0.0, t);
    return f(t) * (beta * t + 1.0) / (beta + 1.0) * inner;
  };
  const double v = 2.0 * integrate_composite(outer, 0.0, 1.0, 32);
  return std::sqrt(std::max(v, 0.0));
}

std::vector<SweepRow> v_beta_sweep(const QuantileStep& g, const TestFunction& phi, double beta,
                                   std::span<const std::size_t> Ns) {
  const double exact = v_beta_continuum(g, phi, beta);
  std::vector<SweepRow> rows;
  for (const auto N : Ns) {
    const auto x = grid_marginals(g, N);
    rows.push_back({N, v_beta_discrete(x.positions(), phi, beta), exact});
  }
  return rows;
}

std::vector<SweepRow> divergence_sweep(const QuantileStep& g, const VectorFieldSpec& zeta,
                                       double beta, std::span<const std::size_t> Ns) {
  const double exact = divergence_continuum(g, zeta, beta);
  std::vector<SweepRow> rows;
  for (const auto N : Ns) {
    SimParams p = sampling_params(N, beta);
    rows.push_back({N, divergence_discrete(grid_marginals(g, N), zeta, p), exact});
  }
  return rows;
}

std::vector<SweepRow> pairing_sweep(const QuantileStep& g, const CylinderFunctional& w,
                                    const TestFunction& phi, std::span<const std::size_t> Ns) {
  const double exact = gradient_pairing_continuum(g, w, phi);
  std::vector<SweepRow> rows;
  for (const auto N : Ns) rows.push_back({N, gradient_pairing_discrete(grid_marginals(g, N), w, phi), exact});
  return rows;
}

std::vector<SweepRow> field_norm_sweep(const QuantileStep& g, const VectorFieldSpec& zeta,
                                       std::span<const std::size_t> Ns) {
  const double exact = std::sqrt(field_norm_sq_continuum(g, zeta));
  std::vector<SweepRow> rows;
  for (const auto N : Ns) {
    rows.push_back({N, std::sqrt(field_norm_sq_discrete(grid_marginals(g, N), zeta)), exact});
  }
  return rows;
}

bool is_decreasing(std::span<const SweepRow> rows, int allowed_rises, double floor) {
  int rises = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].error() > std::max(rows[k - 1].error(), floor)) ++rises;
  }
  return rises <= allowed_rises;
}

}  // namespace wdiff
