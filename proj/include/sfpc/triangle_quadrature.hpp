#pragma once

#include <vector>

#include "sfpc/geometry.hpp"

namespace sfpc {

/// Nodes and weights on [0, 1]; weights sum to 1.
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

LineRule gauss_legendre(int n);

/// A quadrature rule on a generic triangle in barycentric coordinates; the
/// weights sum to 1, so multiply by the triangle area.
struct TriangleRule {
  std::vector<Barycentric> points;
  std::vector<double> weights;
};

/// Collapsed (Duffy) tensor Gauss rule with n points per direction, exact for
/// polynomials of total degree 2n - 2.
TriangleRule collapsed_gauss_rule(int n);

/// Cartesian position of a barycentric point on triangle t.
Point2 to_cartesian(const Triangulation& mesh, int t, const Barycentric& b);

}  // namespace sfpc
