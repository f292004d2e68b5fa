#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wdiff/measure.hpp"
#include "wdiff/random.hpp"
#include "wdiff/stats.hpp"
#include "wdiff/test_function.hpp"

namespace wdiff {

/// Linear interpolation of (i/N, x^i), i = 0..N, with x^0 = 0 and x^N = 1.
class PiecewiseLinearQuantile {
 public:
  explicit PiecewiseLinearQuantile(const ParticleConfig& x);
  std::size_t N() const noexcept { return knots_.size() - 1; }
  /// Knot values y_0 = 0, ..., y_N = 1.
  std::span<const double> knots() const noexcept { return knots_; }
  double operator()(double t) const;

 private:
  std::vector<double> knots_;
};

/// g_X: the conditional expectation of the quantile given its grid values.
PiecewiseLinearQuantile condexp_quantile(const ParticleConfig& x, std::size_t N);

/// <f, g> = int_0^1 f(t) g(t) dt, exact on steps when f has an antiderivative.
double pairing(const TestFunction& f, const QuantileStep& g);
double pairing(const TestFunction& f, const PiecewiseLinearQuantile& g);

/// d/dx^i <f, g_X> = int f(t) (1 - |N t - i|)_+ dt = (eta^N * f)(i/N) / N.
double hat_gradient(const TestFunction& f, std::size_t N, std::size_t i);

/// <f, g_X> = offset + sum_j weights[j-1] x^j, exactly.
struct ProjectedLinear {
  double offset = 0.0;
  std::vector<double> weights;
  double operator()(std::span<const double> x) const;
};
ProjectedLinear project_linear(const TestFunction& f, std::size_t N);

struct Factor {
  TestFunction f;
  int power = 1;
};

/// u(g) = scale * prod_i <f_i, g>^{k_i}. No factors means the constant `scale`.
class CylinderFunctional {
 public:
  CylinderFunctional() = default;
  explicit CylinderFunctional(std::vector<Factor> factors, double scale = 1.0);
  static CylinderFunctional constant(double c);
  static CylinderFunctional linear(TestFunction f);

  std::span<const Factor> factors() const noexcept { return factors_; }
  double scale() const noexcept { return scale_; }
  bool is_constant() const noexcept { return factors_.empty(); }
  const std::string& name() const noexcept { return name_; }

  /// u from the factor values l_i.
  double value(std::span<const double> l) const;
  /// du/dl_i into `out` (same length as factors()).
  void partials(std::span<const double> l, std::span<double> out) const;

  double operator()(const QuantileStep& g) const;
  double operator()(const PiecewiseLinearQuantile& g) const;

 private:
  std::vector<Factor> factors_;
  double scale_ = 1.0;
  std::string name_ = "1";
};

/// "c" for a constant, otherwise "spec^k*spec*..." with optional leading
/// "c*" scale; each spec as in parse_test_function.
CylinderFunctional parse_cylinder(std::string_view text);

/// u_N = u(g_X) on Sigma_N, with the factor projections precomputed.
class GridFunctional {
 public:
  GridFunctional(const CylinderFunctional& u, std::size_t N);
  std::size_t N() const noexcept { return N_; }
  double value(std::span<const double> x) const;
  /// Returns u_N(x) and writes its Euclidean gradient into `grad` (size N-1).
  double value_and_gradient(std::span<const double> x, std::span<double> grad) const;

 private:
  CylinderFunctional u_;
  std::size_t N_;
  std::vector<ProjectedLinear> proj_;
  mutable std::vector<double> l_, c_;
};

/// zeta(g, t) = w(g) phi(g(t)).
struct VectorFieldSpec {
  CylinderFunctional w;
  TestFunction phi;
  /// Throws InvalidArgument unless phi(0) = phi(1) = 0.
  void validate() const;
};

/// (beta/N - 1) sum_{i<N} Q_i + sum_{0<i<N} phi'(x^i), Q_i the difference
/// quotient of phi over [x^i, x^{i+1}] (phi' at the point if the spacing is 0).
double v_beta_discrete(const ParticleConfig& x, const TestFunction& phi, const SimParams& params);
double v_beta_discrete(std::span<const double> x, const TestFunction& phi, double beta);

/// V^0 over interior jumps + beta int phi'(g) - (phi'(0) + phi'(1)) / 2.
double v_beta_continuum(const QuantileStep& g, const TestFunction& phi, double beta);

double divergence_discrete(const ParticleConfig& x, const VectorFieldSpec& zeta,
                           const SimParams& params);
double divergence_continuum(const QuantileStep& g, const VectorFieldSpec& zeta, double beta);

/// <grad w_N, (phi(x^1), ..., phi(x^{N-1}))> in R^{N-1}.
double gradient_pairing_discrete(const ParticleConfig& x, const CylinderFunctional& w,
                                 const TestFunction& phi);
/// <grad w|_g, phi(g(.))> in L^2(dx).
double gradient_pairing_continuum(const QuantileStep& g, const CylinderFunctional& w,
                                  const TestFunction& phi);
/// (1/N) sum_i w_N(x)^2 phi(x^i)^2.
double field_norm_sq_discrete(const ParticleConfig& x, const VectorFieldSpec& zeta);
/// w(g)^2 int phi(g(t))^2 dt.
double field_norm_sq_continuum(const QuantileStep& g, const VectorFieldSpec& zeta);

/// x^i = g(i/N).
ParticleConfig grid_marginals(const QuantileStep& g, std::size_t N);

struct McOptions {
  unsigned jobs = 1;
  std::size_t block_size = 8192;
};

/// Mean of N |grad u_N|^2 under q_N.
Estimate form_estimate_discrete(const CylinderFunctional& u, const SimParams& params,
                                std::size_t samples, const RandomSource& rng,
                                const McOptions& opt = {});
/// Mean of ||grad u|_g||^2_{L^2} over g = iota(x), x ~ q_resolution.
Estimate form_estimate_continuum(const CylinderFunctional& u, std::size_t resolution,
                                 std::size_t samples, double beta, const RandomSource& rng,
                                 const McOptions& opt = {});

/// Mean of (1/N) [<grad u_N, zeta^N> + u_N div zeta^N] under q_N; zero when
/// the integration by parts formula holds.
Estimate ibp_residual_discrete(const CylinderFunctional& u, const VectorFieldSpec& zeta,
                               const SimParams& params, std::size_t samples,
                               const RandomSource& rng, const McOptions& opt = {});

struct IbpPair {
  CylinderFunctional u;
  VectorFieldSpec zeta;
};
/// Residuals of several pairs on one shared stream of q_N samples. The
/// divergence uses `model_beta` when given (a negative control), else
/// params.beta.
std::vector<Estimate> ibp_residuals(std::span<const IbpPair> pairs, const SimParams& params,
                                    std::size_t samples, const RandomSource& rng,
                                    const McOptions& opt = {},
                                    std::optional<double> model_beta = std::nullopt);

/// sqrt(E[u_N^2]) under q_N.
Estimate projection_norm(const CylinderFunctional& u, std::size_t N, double beta,
                         std::size_t samples, const RandomSource& rng, const McOptions& opt = {});

struct ProjectionSweep {
  std::vector<std::size_t> Ns;
  std::vector<Estimate> norms;
  /// Standard error of norms[k+1] - norms[k] from the paired samples.
  std::vector<double> step_stderr;
};
/// Norms for every N in `Ns` from one stream of samples at the largest N: the
/// grid values at coarser N are subsampled from the finest grid, so the
/// sequence is coupled. Every N must divide the largest.
ProjectionSweep projection_sweep(const CylinderFunctional& u, std::span<const std::size_t> Ns,
                                 double beta, std::size_t samples, const RandomSource& rng,
                                 const McOptions& opt = {});
/// Sweeps for several functionals on one shared sample stream.
std::vector<ProjectionSweep> projection_sweeps(std::span<const CylinderFunctional> us,
                                               std::span<const std::size_t> Ns, double beta,
                                               std::size_t samples, const RandomSource& rng,
                                               const McOptions& opt = {});

/// ||l_f||_H under the Dirichlet-process law, from the covariance
/// E[g(s) g(t)] = min(s,t) (beta max(s,t) + 1) / (beta + 1).
double linear_norm_exact(const TestFunction& f, double beta);

struct SweepRow {
  std::size_t N;
  double discrete;
  double continuum;
  double error() const { return discrete > continuum ? discrete - continuum : continuum - discrete; }
};
std::vector<SweepRow> v_beta_sweep(const QuantileStep& g, const TestFunction& phi, double beta,
                                   std::span<const std::size_t> Ns);
std::vector<SweepRow> divergence_sweep(const QuantileStep& g, const VectorFieldSpec& zeta,
                                       double beta, std::span<const std::size_t> Ns);
std::vector<SweepRow> pairing_sweep(const QuantileStep& g, const CylinderFunctional& w,
                                    const TestFunction& phi, std::span<const std::size_t> Ns);
std::vector<SweepRow> field_norm_sweep(const QuantileStep& g, const VectorFieldSpec& zeta,
                                       std::span<const std::size_t> Ns);

/// Errors decrease along the sweep with at most `allowed_rises` increases.
/// Errors below `floor` count as converged, so rounding noise at the level of
/// machine precision is not read as a rise.
bool is_decreasing(std::span<const SweepRow> rows, int allowed_rises = 1, double floor = 1e-11);

}  // namespace wdiff
