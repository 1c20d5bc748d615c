#include "sfpc/bernstein.hpp"

#include <cmath>

#include "sfpc/error.hpp"

namespace sfpc::bernstein {
namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double multinomial(int d, const Multi& m) {
  return factorial(d) / (factorial(m[0]) * factorial(m[1]) * factorial(m[2]));
}

}  // namespace

int count(int d) {
  if (d < 0) throw ArgumentError("Bernstein degree must be non-negative");
  return (d + 1) * (d + 2) / 2;
}

std::vector<Multi> indices(int d) {
  std::vector<Multi> out;
  out.reserve(static_cast<std::size_t>(count(d)));
  for (int i = d; i >= 0; --i) {
    for (int j = d - i; j >= 0; --j) out.push_back({i, j, d - i - j});
  }
  return out;
}

int index_of(const Multi& m) {
  const int d = m[0] + m[1] + m[2];
  // Entries before block i: sum over i' = d..i+1 of (d - i' + 1).
  const int a = d - m[0];
  const int before = a * (a + 1) / 2;
  return before + (a - m[1]);
}

Eigen::VectorXd eval(int d, const Barycentric& b) {
  if (d < 0) throw ArgumentError("Bernstein degree must be non-negative");
  const auto idx = indices(d);
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto& m = idx[n];
    out[static_cast<Eigen::Index>(n)] =
        multinomial(d, m) * std::pow(b[0], m[0]) * std::pow(b[1], m[1]) * std::pow(b[2], m[2]);
  }
  return out;
}

Eigen::MatrixXd gram(int d, double area) {
  const auto idx = indices(d);
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd g(n, n);
  // \int_T b1^a b2^b b3^c = 2 |T| a! b! c! / (a+b+c+2)!
  const double scale = 2.0 * area / factorial(2 * d + 2);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = r; c < n; ++c) {
      const auto& a = idx[static_cast<std::size_t>(r)];
      const auto& b = idx[static_cast<std::size_t>(c)];
      const double v = multinomial(d, a) * multinomial(d, b) * factorial(a[0] + b[0]) *
                       factorial(a[1] + b[1]) * factorial(a[2] + b[2]) * scale;
      g(r, c) = v;
      g(c, r) = v;
    }
  }
  return g;
}

Eigen::VectorXd integrals(int d, double area) {
  return Eigen::VectorXd::Constant(count(d), area / count(d));
}

Eigen::MatrixXd derivative_matrix(int d, const Barycentric& a) {
  if (d < 1) throw ArgumentError("derivative of a degree-0 polynomial");
  const auto lower = indices(d - 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(count(d - 1), count(d));
  for (std::size_t r = 0; r < lower.size(); ++r) {
    for (int dir = 0; dir < 3; ++dir) {
      Multi up = lower[r];
      up[static_cast<std::size_t>(dir)] += 1;
      m(static_cast<Eigen::Index>(r), index_of(up)) += d * a[static_cast<std::size_t>(dir)];
    }
  }
  return m;
}

Barycentric direction_coordinates(const Triangulation& mesh, int t, int dir) {
  const Point2 base = mesh.vertices()[static_cast<std::size_t>(mesh.triangles()[static_cast<std::size_t>(t)].v[0])];
  Point2 moved = base;
  (dir == 0 ? moved.x : moved.y) += 1.0;
  const auto b0 = mesh.barycentric(t, base);
  const auto b1 = mesh.barycentric(t, moved);
  return {b1[0] - b0[0], b1[1] - b0[1], b1[2] - b0[2]};
}

std::array<Eigen::MatrixXd, 3> second_derivative_matrices(const Triangulation& mesh, int t, int d) {
  if (d < 2) throw ArgumentError("second derivatives need degree >= 2");
  const auto ax = direction_coordinates(mesh, t, 0);
  const auto ay = direction_coordinates(mesh, t, 1);
  const Eigen::MatrixXd dx = derivative_matrix(d, ax);
  const Eigen::MatrixXd dy = derivative_matrix(d, ay);
  const Eigen::MatrixXd dx2 = derivative_matrix(d - 1, ax);
  const Eigen::MatrixXd dy2 = derivative_matrix(d - 1, ay);
  return {dx2 * dx, dy2 * dx, dy2 * dy};
}

}  // namespace sfpc::bernstein
