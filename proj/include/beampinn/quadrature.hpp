#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "beampinn/jets.hpp"

namespace beampinn {

/// Gauss-Legendre rule on [0, 1]. Nodes ascend.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t newton_steps = 0;  // worst case over all roots

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

inline constexpr std::size_t kMaxQuadraturePoints = 128;
inline constexpr std::size_t kDefaultQuadraturePoints = 32;

/// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(std::size_t n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (std::size_t k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
    p0 = p1;
    p1 = pk;
  }
  // (1 - x^2) P_n' = n (P_{n-1} - x P_n)
  const double dp = static_cast<double>(n) * (p0 - x * p1) / (1.0 - x * x);
  return {p1, dp};
}

/// Roots of P_n by Newton iteration from the Chebyshev-like initial guess
/// cos(pi (i - 1/4) / (n + 1/2)), then mapped to [0, 1]. Weights are
/// 2 / ((1 - x^2) P_n'(x)^2) on [-1, 1], halved for [0, 1].
inline QuadratureRule gauss_legendre(std::size_t n) {
  expects(n >= 1 && n <= kMaxQuadraturePoints, "gauss_legendre: n must be in 1..128");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    std::size_t steps = 0;
    while (steps < 100) {
      auto [p, d] = legendre_with_derivative(n, x);
      const double dx = p / d;
      x -= dx;
      ++steps;
      if (std::abs(dx) <= 1e-15) break;
    }
    rule.newton_steps = std::max(rule.newton_steps, steps);
    const double dp = legendre_with_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // x descends from near +1; fill symmetric pairs on [0, 1].
    rule.nodes[n - 1 - i] = 0.5 + 0.5 * x;
    rule.nodes[i] = 0.5 - 0.5 * x;
    rule.weights[n - 1 - i] = 0.5 * w;
    rule.weights[i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
  return rule;
}

}  // namespace beampinn
