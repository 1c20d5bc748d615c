#pragma once

// Test-local Gauss-Legendre and collapsed triangle rules, written apart from
// the library's own quadrature so the two can be checked against each other.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "sfpc/geometry.hpp"

namespace oracle {

struct Rule1D {
  std::vector<double> x, w;  // on [0, 1]
};

inline Rule1D legendre(int n) {
  Rule1D r;
  for (int i = 1; i <= n; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x.push_back(0.5 * (1.0 - z));
    r.w.push_back(1.0 / ((1.0 - z * z) * dp * dp));
  }
  return r;
}

// Integral of f over the triangle (a, b, c) by the Duffy map.
inline double integrate_triangle(sfpc::Point2 a, sfpc::Point2 b, sfpc::Point2 c,
                                 const std::function<double(sfpc::Point2)>& f, int n = 10) {
  const Rule1D g = legendre(n);
  const double area2 = std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  double s = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i)
    for (std::size_t j = 0; j < g.x.size(); ++j) {
      const double u = g.x[i], v = g.x[j] * (1.0 - u);
      const sfpc::Point2 p{a.x + u * (b.x - a.x) + v * (c.x - a.x), a.y + u * (b.y - a.y) + v * (c.y - a.y)};
      s += g.w[i] * g.w[j] * (1.0 - u) * f(p);
    }
  return s * area2;
}

}  // namespace oracle
