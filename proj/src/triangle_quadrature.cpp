#include "sfpc/triangle_quadrature.hpp"

#include <cmath>
#include <numbers>

#include "sfpc/error.hpp"

namespace sfpc {

LineRule gauss_legendre(int n) {
  if (n < 1) throw ArgumentError("gauss_legendre: need at least one node");
  LineRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    rule.weights[static_cast<std::size_t>(i)] = 0.5 * w;
  }
  return rule;
}

TriangleRule collapsed_gauss_rule(int n) {
  const LineRule g = gauss_legendre(n);
  TriangleRule rule;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = g.nodes[static_cast<std::size_t>(i)];
      const double v = g.nodes[static_cast<std::size_t>(j)];
      rule.points.push_back({1.0 - u, u * (1.0 - v), u * v});
      // Jacobian u over reference area 1/2.
      rule.weights.push_back(2.0 * u * g.weights[static_cast<std::size_t>(i)] *
                             g.weights[static_cast<std::size_t>(j)]);
    }
  }
  return rule;
}

Point2 to_cartesian(const Triangulation& mesh, int t, const Barycentric& b) {
  const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
  const auto& v = mesh.vertices();
  Point2 p;
  for (int k = 0; k < 3; ++k) {
    p.x += b[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(tri.v[k])].x;
    p.y += b[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(tri.v[k])].y;
  }
  return p;
}

}  // namespace sfpc
