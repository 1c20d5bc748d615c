#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "sfpc/geometry.hpp"

namespace sfpc::bernstein {

using Multi = std::array<int, 3>;

/// Number of degree-d Bernstein polynomials on a triangle, C(d+2, 2).
int count(int d);

/// Multi-indices (i,j,k), i+j+k = d, ordered descending in i, then in j.
std::vector<Multi> indices(int d);

/// Position of (i,j,k) in `indices(i+j+k)`.
int index_of(const Multi& m);

/// B^d_{ijk}(b) = d!/(i!j!k!) b1^i b2^j b3^k for every multi-index, in
/// `indices(d)` order.
Eigen::VectorXd eval(int d, const Barycentric& b);

/// Exact L2 Gram matrix of the degree-d Bernstein polynomials on a triangle
/// of the given area.
Eigen::MatrixXd gram(int d, double area);

/// Exact integrals of each degree-d Bernstein polynomial over a triangle:
/// area / C(d+2,2) for every entry.
Eigen::VectorXd integrals(int d, double area);

/// Matrix mapping degree-d B-coefficients to the degree-(d-1) B-coefficients
/// of the derivative in the direction with directional coordinates `a`
/// (a sums to zero).
Eigen::MatrixXd derivative_matrix(int d, const Barycentric& a);

/// Directional coordinates of the Cartesian unit vector `dir` (0 = x, 1 = y)
/// with respect to triangle `t`.
Barycentric direction_coordinates(const Triangulation& mesh, int t, int dir);

/// Maps degree-d coefficients to degree-(d-2) coefficients of the second
/// derivatives D_xx, D_xy and D_yy on triangle `t`.
std::array<Eigen::MatrixXd, 3> second_derivative_matrices(const Triangulation& mesh, int t, int d);

}  // namespace sfpc::bernstein
