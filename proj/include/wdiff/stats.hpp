#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wdiff {

/// Streaming mean and variance (Welford); merge() combines blocks in a fixed
/// order so block-parallel reductions are reproducible.
class Accumulator {
 public:
  void add(double v) noexcept;
  void merge(const Accumulator& other) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two values.
  double variance() const noexcept;
  /// Standard error of the mean.
  double stderr_mean() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

Estimate estimate(const Accumulator& acc);
Estimate mean_and_stderr(std::span<const double> values);

/// Beta(a, b) distribution function, accurate near both ends.
double beta_cdf(double x, double a, double b);
/// 1 - F(x) where F is the Beta(a, b) CDF, given c = 1 - x exactly.
double beta_cdf_from_complement(double c, double a, double b);

/// Kolmogorov limiting survival function Q(lambda) = P(sup|B| > lambda).
double kolmogorov_survival(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample KS test of `samples` against Beta(a, b).
///
/// Double rounding is part of the null: a sample value v stands for the cell
/// between the midpoints to its neighbouring doubles, and the CDF is evaluated
/// at those midpoints. For parameters near zero most of the mass sits within a
/// few ulps of 0 or 1, where a naive test rejects exact samples. The p-value
/// uses the asymptotic law with Stephens' finite-n correction.
KsResult ks_test_beta(std::vector<double> samples, double a, double b);

}  // namespace wdiff
