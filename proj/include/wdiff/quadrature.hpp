#pragma once

#include <array>

namespace wdiff {

struct GaussLegendre16 {
  std::array<double, 16> nodes;    ///< on [-1, 1]
  std::array<double, 16> weights;
};

/// Nodes and weights, computed once by Newton iteration on P_16.
const GaussLegendre16& gauss_legendre16();

/// 16-point Gauss-Legendre rule on [a, b].
template <class F>
double integrate_gl16(F&& fn, double a, double b) {
  const auto& q = gauss_legendre16();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (int k = 0; k < 16; ++k) s += q.weights[k] * fn(mid + half * q.nodes[k]);
  return s * half;
}

/// Composite 16-point rule with `panels` equal panels.
template <class F>
double integrate_composite(F&& fn, double a, double b, int panels) {
  double s = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) s += integrate_gl16(fn, a + p * h, p + 1 == panels ? b : a + (p + 1) * h);
  return s;
}

}  // namespace wdiff
