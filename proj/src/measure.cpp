#include "wdiff/measure.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iterator>
#include <cmath>
#include <limits>
#include <numeric>

#include "wdiff/errors.hpp"

namespace wdiff {

namespace {

constexpr double kMassTolerance = 1e-12;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void check_simplex(std::span<const double> positions) {
  double prev = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double v = positions[i];
    if (!(v >= prev) || !(v <= 1.0)) {
      throw InvalidArgument("positions must satisfy 0 <= x1 <= ... <= 1 (violated at index " +
                            std::to_string(i) + ")");
    }
    prev = v;
  }
}

ParticleConfig::ParticleConfig(std::vector<double> positions) : positions_(std::move(positions)) {
  check_simplex(positions_);
}

ParticleConfig ParticleConfig::equidistant(std::size_t N) {
  if (N < 1) throw InvalidArgument("N must be >= 1");
  std::vector<double> p(N - 1);
  for (std::size_t i = 1; i < N; ++i) p[i - 1] = static_cast<double>(i) / static_cast<double>(N);
  return ParticleConfig(std::move(p));
}

void SimParams::validate() const {
  if (N < 1) throw InvalidArgument("N must be >= 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be > 0");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
  if (!(delta_reg >= 0.0)) throw InvalidArgument("delta_reg must be >= 0");
  if (!(horizon >= 0.0)) throw InvalidArgument("horizon must be >= 0");
}

std::string to_string(Scheme s) {
  return s == Scheme::BallWalk ? "BallWalk" : "RegularizedSde";
}

Scheme parse_scheme(std::string_view s) {
  s = trim(s);
  if (s == "BallWalk" || s == "ballwalk" || s == "ball_walk") return Scheme::BallWalk;
  if (s == "RegularizedSde" || s == "sde" || s == "regularized_sde") return Scheme::RegularizedSde;
  throw InvalidArgument("unknown scheme '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// QuantileStep

QuantileStep::QuantileStep(std::vector<QuantilePiece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw InvalidArgument("QuantileStep needs at least one piece");
  double total = 0.0;
  double prev = 0.0;
  for (const auto& p : pieces_) {
    if (!(p.length > 0.0)) throw InvalidArgument("QuantileStep piece lengths must be > 0");
    if (!(p.value >= prev) || !(p.value <= 1.0)) {
      throw InvalidArgument("QuantileStep values must be nondecreasing in [0,1]");
    }
    prev = p.value;
    total += p.length;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw InvalidArgument("QuantileStep piece lengths must sum to 1");
  }
}

QuantileStep QuantileStep::constant(double c) { return QuantileStep({{1.0, c}}); }

QuantileStep QuantileStep::from_breakpoints(std::span<const double> breakpoints,
                                            std::span<const double> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size()) {
    throw InvalidArgument("need one value per breakpoint");
  }
  if (breakpoints.front() != 0.0) throw InvalidArgument("first breakpoint must be 0");
  std::vector<QuantilePiece> pieces(breakpoints.size());
  for (std::size_t j = 0; j < breakpoints.size(); ++j) {
    const double end = j + 1 < breakpoints.size() ? breakpoints[j + 1] : 1.0;
    if (!(end > breakpoints[j])) throw InvalidArgument("breakpoints must increase strictly in [0,1)");
    pieces[j] = {end - breakpoints[j], values[j]};
  }
  return QuantileStep(std::move(pieces));
}

std::vector<double> QuantileStep::breakpoints() const {
  std::vector<double> t(pieces_.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < pieces_.size(); ++j) {
    t[j] = acc;
    acc += pieces_[j].length;
  }
  return t;
}

std::vector<double> QuantileStep::values() const {
  std::vector<double> v(pieces_.size());
  for (std::size_t j = 0; j < pieces_.size(); ++j) v[j] = pieces_[j].value;
  return v;
}

double QuantileStep::operator()(double t) const {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < pieces_.size(); ++j) {
    acc += pieces_[j].length;
    if (t < acc) return pieces_[j].value;
  }
  return pieces_.back().value;
}

QuantileStep QuantileStep::canonical() const {
  std::vector<QuantilePiece> out;
  out.reserve(pieces_.size());
  for (const auto& p : pieces_) {
    if (!out.empty() && out.back().value == p.value) {
      out.back().length += p.length;
    } else {
      out.push_back(p);
    }
  }
  return QuantileStep(std::move(out));
}

bool QuantileStep::operator==(const QuantileStep& other) const {
  const auto a = canonical();
  const auto b = other.canonical();
  if (a.pieces_.size() != b.pieces_.size()) return false;
  for (std::size_t j = 0; j < a.pieces_.size(); ++j) {
    if (a.pieces_[j].length != b.pieces_[j].length || a.pieces_[j].value != b.pieces_[j].value) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// EmpiricalMeasure

EmpiricalMeasure::EmpiricalMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InvalidArgument("EmpiricalMeasure needs at least one atom");
  double total = 0.0;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    const auto& a = atoms_[k];
    if (!(a.position >= 0.0 && a.position <= 1.0)) throw InvalidArgument("atom outside [0,1]");
    if (!(a.weight > 0.0 && a.weight <= 1.0 + kMassTolerance)) {
      throw InvalidArgument("atom weights must lie in (0,1]");
    }
    if (k > 0 && !(a.position > atoms_[k - 1].position)) {
      throw InvalidArgument("atom positions must increase strictly");
    }
    total += a.weight;
  }
  if (std::abs(total - 1.0) > kMassTolerance) throw InvalidArgument("atom weights must sum to 1");
}

// ---------------------------------------------------------------------------
// Operations

std::vector<double> positions_from_log_spacings(std::span<const double> log_spacings) {
  const std::size_t N = log_spacings.size();
  const double m = *std::max_element(log_spacings.begin(), log_spacings.end());
  std::vector<double> s(N);
  for (std::size_t i = 0; i < N; ++i) s[i] = std::exp(log_spacings[i] - m);
  std::vector<double> prefix(N + 1, 0.0);
  std::vector<double> suffix(N + 1, 0.0);
  for (std::size_t i = 0; i < N; ++i) prefix[i + 1] = prefix[i] + s[i];
  for (std::size_t i = N; i-- > 0;) suffix[i] = suffix[i + 1] + s[i];
  const double total = prefix[N];
  std::vector<double> pos(N - 1);
  for (std::size_t i = 1; i < N; ++i) {
    const double lo = prefix[i] / total;
    const double hi = suffix[i] / total;
    pos[i - 1] = lo <= hi ? lo : 1.0 - hi;
  }
  // The switch between the two forms can leave a one-ulp inversion.
  double prev = 0.0;
  for (auto& p : pos) {
    p = std::clamp(p, prev, 1.0);
    prev = p;
  }
  return pos;
}

ParticleConfig sample_config(const SimParams& params, RandomSource& rng) {
  const std::size_t N = params.N;
  if (N < 1) throw InvalidArgument("N must be >= 1");
  if (N == 1) return ParticleConfig();
  const double alpha = params.alpha();
  std::vector<double> logs(N);
  for (int attempt = 0; attempt < 100; ++attempt) {
    bool finite = true;
    for (auto& l : logs) {
      l = rng.log_gamma(alpha);
      finite = finite && std::isfinite(l);
    }
    if (finite) return ParticleConfig(positions_from_log_spacings(logs));
  }
  throw SamplingError("100 consecutive non-finite Gamma spacing draws");
}

double log_density_qn(std::span<const double> positions, double beta) {
  const std::size_t N = positions.size() + 1;
  const double alpha = beta / static_cast<double>(N);
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i <= positions.size(); ++i) {
    const double next = i < positions.size() ? positions[i] : 1.0;
    const double d = next - prev;
    if (!(d > 0.0)) throw DegenerateSpacing(i + 1);
    acc += std::log(d);
    prev = next;
  }
  return std::lgamma(beta) - static_cast<double>(N) * std::lgamma(alpha) + (alpha - 1.0) * acc;
}

double log_density_qn(const ParticleConfig& x, const SimParams& params) {
  if (x.N() != params.N) throw InvalidArgument("config size does not match params.N");
  return log_density_qn(x.positions(), params.beta);
}

QuantileStep embed_quantile(const ParticleConfig& x) {
  const std::size_t N = x.N();
  const double h = 1.0 / static_cast<double>(N);
  std::vector<QuantilePiece> pieces(N);
  for (std::size_t i = 0; i < N; ++i) pieces[i] = {h, x.x(i)};
  return QuantileStep(std::move(pieces));
}

EmpiricalMeasure measure_of_quantile(const QuantileStep& g) {
  std::vector<Atom> atoms;
  atoms.reserve(g.size());
  for (const auto& p : g.pieces()) {
    if (!atoms.empty() && atoms.back().position == p.value) {
      atoms.back().weight += p.length;
    } else {
      atoms.push_back({p.value, p.length});
    }
  }
  return EmpiricalMeasure(std::move(atoms));
}

QuantileStep quantile_of_measure(const EmpiricalMeasure& mu) {
  std::vector<QuantilePiece> pieces;
  pieces.reserve(mu.size());
  for (const auto& a : mu.atoms()) pieces.push_back({a.weight, a.position});
  return QuantileStep(std::move(pieces));
}

EmpiricalMeasure empirical_measure(const ParticleConfig& x, bool modified) {
  const std::size_t N = x.N();
  if (!modified && N < 2) throw InvalidArgument("mu^N is undefined without particles (N = 1)");
  const double w = modified ? 1.0 / static_cast<double>(N) : 1.0 / static_cast<double>(N - 1);
  std::vector<Atom> atoms;
  atoms.reserve(N);
  if (modified) atoms.push_back({0.0, w});
  for (const double p : x.positions()) {
    if (!atoms.empty() && atoms.back().position == p) {
      atoms.back().weight += w;
    } else {
      atoms.push_back({p, w});
    }
  }
  return EmpiricalMeasure(std::move(atoms));
}

std::vector<Interval> gaps(const EmpiricalMeasure& mu) {
  std::vector<Interval> out;
  const auto atoms = mu.atoms();
  out.reserve(atoms.size() + 1);
  if (atoms.front().position > 0.0) out.push_back({0.0, atoms.front().position});
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
    out.push_back({atoms[k].position, atoms[k + 1].position});
  }
  if (atoms.back().position < 1.0) out.push_back({atoms.back().position, 1.0});
  return out;
}

double wasserstein2(const QuantileStep& g1, const QuantileStep& g2) {
  const auto a = g1.canonical();
  const auto b = g2.canonical();
  const auto ta = a.breakpoints();
  const auto tb = b.breakpoints();
  std::vector<double> t;
  t.reserve(ta.size() + tb.size() + 1);
  std::merge(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(t));
  t.erase(std::unique(t.begin(), t.end()), t.end());
  t.push_back(1.0);
  std::size_t i = 0, j = 0;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    while (i + 1 < ta.size() && ta[i + 1] <= t[k]) ++i;
    while (j + 1 < tb.size() && tb[j + 1] <= t[k]) ++j;
    const double diff = a.pieces()[i].value - b.pieces()[j].value;
    acc += diff * diff * (t[k + 1] - t[k]);
  }
  return std::sqrt(acc);
}

std::string format_config(const ParticleConfig& x) {
  std::string out;
  for (std::size_t i = 0; i < x.n_particles(); ++i) {
    if (i) out += ',';
    out += format_double(x.positions()[i]);
  }
  return out;
}

ParticleConfig parse_config(std::string_view line) {
  line = trim(line);
  if (line.empty()) return ParticleConfig();
  std::vector<double> p;
  for (auto tok : split(line, ',')) p.push_back(parse_double(tok));
  return ParticleConfig(std::move(p));
}

std::string format_quantile(const QuantileStep& g) {
  std::string out;
  const auto t = g.breakpoints();
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (j) out += ';';
    out += format_double(t[j]);
    out += ':';
    out += format_double(g.pieces()[j].value);
  }
  return out;
}

QuantileStep parse_quantile(std::string_view text) {
  text = trim(text);
  std::vector<double> t, v;
  for (auto tok : split(text, ';')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos) {
      throw InvalidArgument("expected breakpoint:value, got '" + std::string(tok) + "'");
    }
    t.push_back(parse_double(tok.substr(0, colon)));
    v.push_back(parse_double(tok.substr(colon + 1)));
  }
  return QuantileStep::from_breakpoints(t, v);
}

}  // namespace wdiff
