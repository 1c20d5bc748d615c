#include "sfpc/bivariate_basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sfpc/bernstein.hpp"
#include "sfpc/error.hpp"
#include "sfpc/triangle_quadrature.hpp"

namespace sfpc {
namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

int local_slot(const Triangle& tri, int vertex) {
  for (int k = 0; k < 3; ++k) {
    if (tri.v[k] == vertex) return k;
  }
  throw InternalError("vertex not part of triangle");
}

void validate_degree(int d, int r) {
  if (d < 1 || d > 5) throw ArgumentError("spline degree must be in 1..5");
  if (r < 0) throw ArgumentError("smoothness must be non-negative");
  if (r >= d) throw ArgumentError("smoothness r must be smaller than degree d");
}

}  // namespace

Eigen::MatrixXd gram_matrix_raw(const Triangulation& mesh, int d) {
  const int nl = bernstein::count(d);
  const auto nt = static_cast<int>(mesh.num_triangles());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nl * nt, nl * nt);
  for (int t = 0; t < nt; ++t) g.block(t * nl, t * nl, nl, nl) = bernstein::gram(d, mesh.area(t));
  return g;
}

Eigen::MatrixXd energy_matrix_raw(const Triangulation& mesh, int d) {
  if (d < 2) throw ArgumentError("thin-plate energy needs degree >= 2");
  const int nl = bernstein::count(d);
  const auto nt = static_cast<int>(mesh.num_triangles());
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(nl * nt, nl * nt);
  for (int t = 0; t < nt; ++t) {
    const Eigen::MatrixXd g2 = bernstein::gram(d - 2, mesh.area(t));
    const auto [dxx, dxy, dyy] = bernstein::second_derivative_matrices(mesh, t, d);
    e.block(t * nl, t * nl, nl, nl) =
        dxx.transpose() * g2 * dxx + 2.0 * dxy.transpose() * g2 * dxy + dyy.transpose() * g2 * dyy;
  }
  return e;
}

Eigen::MatrixXd smoothness_constraints_full(const Triangulation& mesh, int d, int r) {
  validate_degree(d, r);
  const int nl = bernstein::count(d);
  const auto& tris = mesh.triangles();
  const auto& verts = mesh.vertices();
  const int ncols = nl * static_cast<int>(tris.size());

  std::vector<Eigen::RowVectorXd> rows;
  for (const auto& [edge, owners] : mesh.edge_adjacency()) {
    if (owners.size() != 2) continue;
    const int t1 = owners[0];
    const int t2 = owners[1];
    const Triangle& a = tris[static_cast<std::size_t>(t1)];
    const Triangle& b = tris[static_cast<std::size_t>(t2)];
    const int a_e1 = local_slot(a, edge.first);
    const int a_e2 = local_slot(a, edge.second);
    const int a_op = 3 - a_e1 - a_e2;
    const int b_e1 = local_slot(b, edge.first);
    const int b_e2 = local_slot(b, edge.second);
    const int b_op = 3 - b_e1 - b_e2;
    // Opposite vertex of t2 in barycentric coordinates of t1.
    const Barycentric lam = mesh.barycentric(t1, verts[static_cast<std::size_t>(b.v[b_op])]);

    for (int m = 0; m <= r; ++m) {
      for (int l1 = 0; l1 <= d - m; ++l1) {
        const int l2 = d - m - l1;
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(ncols);
        bernstein::Multi target{};
        target[static_cast<std::size_t>(b_op)] = m;
        target[static_cast<std::size_t>(b_e1)] = l1;
        target[static_cast<std::size_t>(b_e2)] = l2;
        row[t2 * nl + bernstein::index_of(target)] = 1.0;
        for (int nu = 0; nu <= m; ++nu) {
          for (int mu = 0; mu <= m - nu; ++mu) {
            const int ka = m - nu - mu;
            bernstein::Multi src{};
            src[static_cast<std::size_t>(a_op)] = nu;
            src[static_cast<std::size_t>(a_e1)] = l1 + mu;
            src[static_cast<std::size_t>(a_e2)] = l2 + ka;
            const double w = factorial(m) / (factorial(nu) * factorial(mu) * factorial(ka)) *
                             std::pow(lam[static_cast<std::size_t>(a_op)], nu) *
                             std::pow(lam[static_cast<std::size_t>(a_e1)], mu) *
                             std::pow(lam[static_cast<std::size_t>(a_e2)], ka);
            row[t1 * nl + bernstein::index_of(src)] -= w;
          }
        }
        rows.push_back(std::move(row));
      }
    }
  }
  Eigen::MatrixXd h(static_cast<Eigen::Index>(rows.size()), ncols);
  for (std::size_t i = 0; i < rows.size(); ++i) h.row(static_cast<Eigen::Index>(i)) = rows[i];
  return h;
}

namespace {

struct ConstraintSplit {
  Eigen::MatrixXd row_space;   // rank x N, orthonormal rows
  Eigen::MatrixXd null_space;  // N x (N - rank), orthonormal columns
};

ConstraintSplit split_constraints(const Triangulation& mesh, int d, int r) {
  const Eigen::MatrixXd h = smoothness_constraints_full(mesh, d, r);
  const Eigen::Index n = h.cols();
  if (h.rows() == 0) return {Eigen::MatrixXd(0, n), Eigen::MatrixXd::Identity(n, n)};
  // Square up with zero rows so that V is complete.
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(std::max(h.rows(), n), n);
  padded.topRows(h.rows()) = h;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(padded, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-10 * std::max<double>(1.0, s[0]) * static_cast<double>(std::max(h.rows(), n));
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  const Eigen::MatrixXd& v = svd.matrixV();
  return {v.leftCols(rank).transpose(), v.rightCols(n - rank)};
}

}  // namespace

Eigen::MatrixXd smoothness_constraints(const Triangulation& mesh, int d, int r) {
  return split_constraints(mesh, d, r).row_space;
}

BivariateBasis BivariateBasis::build(Triangulation mesh, int degree, int smoothness) {
  validate_degree(degree, smoothness);
  BivariateBasis basis;
  basis.degree_ = degree;
  basis.smoothness_ = smoothness;
  basis.local_size_ = bernstein::count(degree);

  const Eigen::MatrixXd gram = gram_matrix_raw(mesh, degree);
  const Eigen::MatrixXd null = split_constraints(mesh, degree, smoothness).null_space;
  if (null.cols() == 0) throw ConstructionError("smoothness constraints leave an empty spline space");

  // Modified Gram-Schmidt in the L2 (Gram) inner product, two passes.
  std::vector<Eigen::VectorXd> q;
  q.reserve(static_cast<std::size_t>(null.cols()));
  for (Eigen::Index c = 0; c < null.cols(); ++c) {
    Eigen::VectorXd v = null.col(c);
    const double initial = std::sqrt(v.dot(gram * v));
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& qj : q) v -= qj.dot(gram * v) * qj;
    }
    const double norm = std::sqrt(v.dot(gram * v));
    if (!(norm > 1e-10 * initial)) continue;
    q.push_back(v / norm);
  }
  if (q.empty()) throw ConstructionError("orthonormalization produced no basis functions");
  basis.transform_.resize(null.rows(), static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i) basis.transform_.col(static_cast<Eigen::Index>(i)) = q[i];

  // Quadrature certification of every closed-form Gram block.
  const TriangleRule rule = collapsed_gauss_rule(degree + 2);
  const int nl = basis.local_size_;
  bool certified = true;
  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
    Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(nl, nl);
    for (std::size_t k = 0; k < rule.points.size(); ++k) {
      const Eigen::VectorXd v = bernstein::eval(degree, rule.points[k]);
      quad.noalias() += rule.weights[k] * mesh.area(t) * v * v.transpose();
    }
    const double err = (quad - gram.block(t * nl, t * nl, nl, nl)).cwiseAbs().maxCoeff();
    if (err > 1e-10 * mesh.area(t)) certified = false;
  }
  basis.gram_certified_ = certified;

  if (degree >= 2) {
    const Eigen::MatrixXd raw = energy_matrix_raw(mesh, degree);
    Eigen::MatrixXd e = basis.transform_.transpose() * raw * basis.transform_;
    basis.energy_ = 0.5 * (e + e.transpose());
  }
  basis.mesh_ = std::move(mesh);
  return basis;
}

Eigen::MatrixXd energy_matrix(const BivariateBasis& basis) {
  if (basis.degree() < 2) throw ArgumentError("thin-plate energy needs degree >= 2");
  return basis.energy();
}

Eigen::RowVectorXd BivariateBasis::evaluate_piece(int t, Point2 p) const {
  const Eigen::VectorXd v = bernstein::eval(degree_, mesh_.barycentric(t, p));
  return v.transpose() * transform_.middleRows(t * local_size_, local_size_);
}

Eigen::RowVectorXd BivariateBasis::evaluate(Point2 p) const {
  const auto t = mesh_.locate(p);
  if (!t) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "point (" << p.x << ", " << p.y << ") lies outside the triangulated domain";
    throw LocationError(msg.str());
  }
  return evaluate_piece(*t, p);
}

Eigen::MatrixXd BivariateBasis::eval_design(std::span<const Point2> points) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), size());
  for (std::size_t i = 0; i < points.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = evaluate(points[i]);
  return out;
}

}  // namespace sfpc
