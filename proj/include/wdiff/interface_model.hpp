#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wdiff/dynamics.hpp"
#include "wdiff/measure.hpp"

namespace wdiff {

/// Heights phi(1) <= ... <= phi(N-1) in [0, sqrt(N)], with phi(0) = 0 and
/// phi(N) = sqrt(N) implicit.
class InterfaceState {
 public:
  InterfaceState(std::size_t N, std::vector<double> heights);
  std::size_t N() const noexcept { return N_; }
  std::span<const double> heights() const noexcept { return heights_; }
  /// phi(i) for i in 0..N.
  double height(std::size_t i) const noexcept;
  bool operator==(const InterfaceState&) const = default;

 private:
  std::size_t N_;
  std::vector<double> heights_;
};

/// V(r) = (1 - beta/N) log r.
double interaction_potential(double r, std::size_t N, double beta);

/// H_N = sum_{x=0}^{N-1} V(phi(x+1) - phi(x)). Throws DegenerateSpacing on a
/// zero increment (infinite energy).
double hamiltonian(const InterfaceState& phi, double beta);

InterfaceState to_interface(const ParticleConfig& x);
ParticleConfig from_interface(const InterfaceState& phi);

/// Microscopic interface time corresponding to macroscopic particle time t.
double interface_time(double t, std::size_t N);

/// For each sample, c = log q_N(x) + H_N(sqrt(N) x); the Gibbs measure
/// exp(-H_N) and q_N agree up to the constant Jacobian exactly when c is the
/// same for all samples. Returns max c - min c, the largest pairwise mismatch.
double gibbs_consistency(std::span<const ParticleConfig> samples, double beta);
/// Negative control: q_N with beta_q against the Hamiltonian with beta_h.
double gibbs_consistency(std::span<const ParticleConfig> samples, double beta_q, double beta_h);

/// The G-valued fluctuation field at each recorded time.
std::vector<QuantileStep> fluctuation_field(const SimulationPath& path);

/// "# scale=sqrt(N) N=..." header line, then comma-separated heights.
void write_interface(std::ostream& out, const InterfaceState& phi);
InterfaceState read_interface(std::istream& in);

}  // namespace wdiff
