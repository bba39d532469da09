#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "amplab/errors.hpp"

namespace amplab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [a, b], nodes ascending.
inline QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw ParameterError("gauss_legendre: need at least one node");
  const int order = static_cast<int>(n);
  // Non-negative zeros of P_n, ascending; includes 0 when n is odd.
  const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(order);
  std::vector<double> x;
  x.reserve(n);
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it)
    if (*it > 0.0) x.push_back(-*it);
  for (double z : zeros) x.push_back(z);

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = boost::math::legendre_p_prime(order, x[i]);
    rule.nodes[i] = mid + half * x[i];
    rule.weights[i] = half * 2.0 / ((1.0 - x[i] * x[i]) * d * d);
  }
  return rule;
}

/// Gauss-Legendre on `panels` equal sub-intervals of [a, b].
inline QuadratureRule composite_gauss_legendre(std::size_t panels, std::size_t per_panel,
                                               double a, double b) {
  if (panels == 0) throw ParameterError("composite_gauss_legendre: need at least one panel");
  const QuadratureRule unit = gauss_legendre(per_panel, 0.0, 1.0);
  QuadratureRule rule;
  rule.nodes.reserve(panels * per_panel);
  rule.weights.reserve(panels * per_panel);
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    for (std::size_t i = 0; i < per_panel; ++i) {
      rule.nodes.push_back(lo + h * unit.nodes[i]);
      rule.weights.push_back(h * unit.weights[i]);
    }
  }
  return rule;
}

/// Trapezoid rule for samples on a uniform grid.
inline double trapezoid(std::span<const double> y, double h) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * h;
}

}  // namespace amplab
