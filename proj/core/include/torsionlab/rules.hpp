#pragma once

#include <vector>

namespace torsionlab {

/// Gauss-Legendre rule mapped to [a, b].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n, double a, double b);

/// Smooth step: 1 for t <= 0, 0 for t >= 1, C-infinity and flat at both ends.
double smooth_step(double t);

/// Sum of `values` by pairwise reduction (order independent of thread count).
double pairwise_sum(const std::vector<double>& values);

}  // namespace torsionlab
