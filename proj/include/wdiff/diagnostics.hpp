#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wdiff/dynamics.hpp"
#include "wdiff/measure.hpp"
#include "wdiff/stats.hpp"
#include "wdiff/test_function.hpp"

namespace wdiff {

/// Martingale-problem drift
///   beta <f'', mu> + sum_{I in gaps(mu)} [(f''(I-) + f''(I+))/2 - (f'(I+) - f'(I-))/|I|]
///   - (f''(0) + f''(1))/2.
/// The boundary-gap convention lives entirely in gaps().
double drift_functional(const EmpiricalMeasure& mu, const TestFunction& f, double beta);

/// M_t = <f, nu_t> - <f, nu_0> - int_0^t drift(nu_s) ds on the recorded grid,
/// nu the modified empirical measure and the integral by the trapezoid rule.
std::vector<double> martingale_series(const SimulationPath& path, const TestFunction& f, double beta);

struct QvResult {
  double realized = 0.0;   ///< sum of squared increments of M
  double predicted = 0.0;  ///< 2 int <f'^2, nu_s> ds, trapezoid
};

QvResult qv_check(const SimulationPath& path, const TestFunction& f, double beta);

struct QvWindow {
  double start = 0.0;
  double length = 0.0;
  QvResult qv;
  double bound = 0.0;  ///< 2 * length * ||f'||^2
};
/// Realized and predicted QV over `windows` consecutive equal windows of the
/// recorded time span (each window a whole number of recording steps).
std::vector<QvWindow> qv_windows(const SimulationPath& path, const TestFunction& f, double beta,
                                 std::size_t windows);

struct GeneratorValue {
  double value = 0.0;
  double bound = 0.0;
};

/// N L^N F^N(x) for F^N(x) = <f, mu^N(x)>, as
///   beta/(N-1) sum_{i=1}^N Q_i + N/(N-1) sum_{i=1}^{N-1} (f''(x^i) - Q_i) - N/(N-1) Q_N,
/// Q_i the difference quotient of f' over [x^{i-1}, x^i]; with the bound
/// ||f''|| N (beta+1)/(N-1) + ||f'''|| N/(N-1).
GeneratorValue generator_apply(const ParticleConfig& x, const TestFunction& f, const SimParams& params);

/// The same quantity from (alpha-1) sum_i (1/d_i - 1/d_{i+1}) f'(x^i) + sum_i f''(x^i),
/// scaled by N/(N-1). Interior configurations only; used as a cross-check.
double generator_direct(const ParticleConfig& x, const TestFunction& f, const SimParams& params);

struct MarginalReport {
  std::vector<KsResult> coordinates;  ///< index i-1 for x^i
  double level = 0.01;
  std::size_t failures() const;
  double failure_fraction() const;
};

/// KS test of each x^i against Beta(i beta/N, (N-i) beta/N).
MarginalReport marginal_test(std::span<const ParticleConfig> samples, const SimParams& params,
                             double level = 0.01);

struct GapStatistics {
  double empirical = 0.0;
  double std_error = 0.0;  ///< from the per-sample fractions
  double oracle = 0.0;   ///< Beta(beta/N, beta - beta/N) CDF at the threshold
};

/// Fraction of spacings (all N per configuration) at or below `threshold`.
GapStatistics gap_statistics(std::span<const ParticleConfig> samples, const SimParams& params,
                             double threshold);

}  // namespace wdiff
