#pragma once

#include <span>

#include <Eigen/Dense>

#include "sfpc/geometry.hpp"

namespace sfpc {

/// Block-diagonal L2 Gram matrix of all per-triangle degree-d Bernstein
/// polynomials (triangle-major, then `bernstein::indices(d)` order).
Eigen::MatrixXd gram_matrix_raw(const Triangulation& mesh, int d);

/// Rank-reduced C^r continuity constraints on raw per-triangle Bernstein
/// coefficients. Rows are orthonormal; H * gamma = 0 iff the piecewise
/// polynomial with coefficients gamma is C^r across every shared edge.
Eigen::MatrixXd smoothness_constraints(const Triangulation& mesh, int d, int r);

/// The unreduced constraint rows, one per (edge, order m, coefficient).
Eigen::MatrixXd smoothness_constraints_full(const Triangulation& mesh, int d, int r);

/// Orthonormal C^r bivariate spline basis b(x, y) on a triangulation.
///
/// Basis function q is the piecewise polynomial whose raw Bernstein
/// coefficients are column q of `transform()`. The columns span the null
/// space of the smoothness constraints and are orthonormalized in the L2
/// inner product, so the integral of b b^T over the domain is the identity.
/// Immutable after construction; safe to share across threads.
class BivariateBasis {
 public:
  BivariateBasis() = default;

  /// Builds the basis. Throws ArgumentError for invalid (d, r) and
  /// ConstructionError when the constrained space is empty.
  static BivariateBasis build(Triangulation mesh, int degree, int smoothness);

  const Triangulation& triangulation() const { return mesh_; }
  int degree() const { return degree_; }
  int smoothness() const { return smoothness_; }
  int size() const { return static_cast<int>(transform_.cols()); }
  int local_size() const { return local_size_; }
  const Eigen::MatrixXd& transform() const { return transform_; }

  /// True when every closed-form Gram block matched quadrature to 1e-10.
  bool gram_certified() const { return gram_certified_; }

  /// Thin-plate energy matrix; empty for degree < 2.
  const Eigen::MatrixXd& energy() const { return energy_; }

  /// b(p)^T. Throws LocationError when p is outside the domain.
  Eigen::RowVectorXd evaluate(Point2 p) const;

  /// Evaluates the polynomial piece of triangle t at p (p may lie outside t).
  Eigen::RowVectorXd evaluate_piece(int t, Point2 p) const;

  /// Row i = b(points[i])^T.
  Eigen::MatrixXd eval_design(std::span<const Point2> points) const;

  /// b(p)^T theta.
  double value(Point2 p, const Eigen::VectorXd& theta) const { return evaluate(p).dot(theta); }

 private:
  Triangulation mesh_;
  int degree_ = 0;
  int smoothness_ = 0;
  int local_size_ = 0;
  Eigen::MatrixXd transform_;
  Eigen::MatrixXd energy_;
  bool gram_certified_ = false;
};

/// Gamma = \int (b_xx b_xx^T + 2 b_xy b_xy^T + b_yy b_yy^T). Throws
/// ArgumentError when the degree is below 2.
Eigen::MatrixXd energy_matrix(const BivariateBasis& basis);

/// Raw (per-triangle Bernstein) thin-plate energy matrix.
Eigen::MatrixXd energy_matrix_raw(const Triangulation& mesh, int d);

}  // namespace sfpc
