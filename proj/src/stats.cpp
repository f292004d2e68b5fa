#include "wdiff/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>

#include "wdiff/errors.hpp"

namespace wdiff {

void Accumulator::add(double v) noexcept {
  ++n_;
  const double delta = v - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (v - mean_);
}

void Accumulator::merge(const Accumulator& o) noexcept {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double n = static_cast<double>(n_ + o.n_);
  const double delta = o.mean_ - mean_;
  mean_ += delta * static_cast<double>(o.n_) / n;
  m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
  n_ += o.n_;
}

double Accumulator::variance() const noexcept {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double Accumulator::stderr_mean() const noexcept {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

Estimate estimate(const Accumulator& acc) { return {acc.mean(), acc.stderr_mean()}; }

Estimate mean_and_stderr(std::span<const double> values) {
  Accumulator acc;
  for (const double v : values) acc.add(v);
  return estimate(acc);
}

double beta_cdf(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("Beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x > 0.5) return 1.0 - beta_cdf_from_complement(1.0 - x, a, b);
  return boost::math::ibeta(a, b, x);
}

double beta_cdf_from_complement(double c, double a, double b) {
  if (c <= 0.0) return 0.0;
  if (c >= 1.0) return 1.0;
  return boost::math::ibeta(b, a, c);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_test_beta(std::vector<double> xs, double a, double b) {
  KsResult r;
  r.n = xs.size();
  if (xs.empty()) return r;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  constexpr double kTiny = std::numeric_limits<double>::denorm_min();

  // CDF at the left and right edges of the rounding cell of v. Below 1/2 the
  // cell is far narrower than the CDF resolves, so both edges are F(v).
  struct Edges {
    double left, right;
  };
  const auto edges = [&](double v) -> Edges {
    if (v <= 0.0) return {0.0, beta_cdf(kTiny, a, b) * std::exp2(-a)};  // F(denorm_min / 2), power-law head
    if (v >= 1.0) {
      const double below = std::nextafter(v, 0.0);
      return {1.0 - beta_cdf_from_complement(0.5 * (v - below), a, b), 1.0};
    }
    if (v < 0.5) {
      const double f = beta_cdf(v, a, b);
      return {f, f};
    }
    const double below = std::nextafter(v, 0.0);
    const double above = std::nextafter(v, 2.0);
    return {1.0 - beta_cdf_from_complement((1.0 - v) + 0.5 * (v - below), a, b),
            1.0 - beta_cdf_from_complement((1.0 - v) - 0.5 * (above - v), a, b)};
  };

  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i]) ++j;
    const auto e = edges(xs[i]);
    d = std::max(d, e.left - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(j) / n - e.right);
    i = j;
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

}  // namespace wdiff
