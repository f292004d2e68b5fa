#include "wdiff/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace wdiff {

namespace {

GaussLegendre16 build() {
  constexpr int n = 16;
  GaussLegendre16 q{};
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    q.nodes[i] = x;
    q.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

}  // namespace

const GaussLegendre16& gauss_legendre16() {
  static const GaussLegendre16 q = build();
  return q;
}

}  // namespace wdiff
