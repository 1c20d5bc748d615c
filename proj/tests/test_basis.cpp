#include <random>

#include <gtest/gtest.h>

#include "quadrature_oracle.hpp"
#include "sfpc/bernstein.hpp"
#include "sfpc/bivariate_basis.hpp"
#include "sfpc/error.hpp"
#include "sfpc/simulation.hpp"
#include "sfpc/temporal_basis.hpp"
#include "sfpc/triangle_quadrature.hpp"

using namespace sfpc;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Triangulation unit_square() {
  return Triangulation({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {Triangle{{0, 1, 2}}, Triangle{{0, 2, 3}}});
}

// Exact first derivative of a cubic-or-lower piece along direction (dx, dy)
// by Richardson-extrapolated central differences.
double piece_derivative(const BivariateBasis& b, int t, Point2 p, double dx, double dy, int q) {
  auto f = [&](double h) { return b.evaluate_piece(t, {p.x + h * dx, p.y + h * dy})(q); };
  auto D = [&](double h) { return (f(h) - f(-h)) / (2 * h); };
  const double h = 0.01;
  return (4 * D(h) - D(2 * h)) / 3;
}

}  // namespace

TEST(Geometry, TrianglesAreReorientedCounterClockwise) {
  Triangulation m({{0, 0}, {1, 0}, {0, 1}}, {Triangle{{0, 2, 1}}});
  const auto& t = m.triangles()[0];
  EXPECT_GT(signed_area(m.vertices()[t.v[0]], m.vertices()[t.v[1]], m.vertices()[t.v[2]]), 0);
  EXPECT_NEAR(m.total_area(), 0.5, 1e-15);
}

TEST(Geometry, DegenerateTriangleRejected) {
  EXPECT_THROW(Triangulation({{0, 0}, {1, 1}, {2, 2}}, {Triangle{{0, 1, 2}}}), GeometryError);
}

TEST(Geometry, BarycentricReproducesPoint) {
  const auto m = unit_square();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 50; ++i) {
    const Point2 p{u(rng), u(rng)};
    const auto t = m.locate(p);
    ASSERT_TRUE(t.has_value());
    const auto b = m.barycentric(*t, p);
    EXPECT_NEAR(b[0] + b[1] + b[2], 1.0, 1e-14);
    const Point2 q = to_cartesian(m, *t, b);
    EXPECT_NEAR(q.x, p.x, 1e-14);
    EXPECT_NEAR(q.y, p.y, 1e-14);
    for (double c : b) EXPECT_GE(c, -1e-12);
  }
}

TEST(Geometry, HoleIsOutsideDomain) {
  const auto m = square_hole_mesh();
  EXPECT_FALSE(m.contains({1.0, 1.0}));
  EXPECT_TRUE(m.contains({0.25, 1.0}));
  EXPECT_TRUE(m.contains({0.5, 1.0}));  // on the hole boundary
  EXPECT_FALSE(m.contains({2.1, 0.0}));
  EXPECT_NEAR(m.total_area(), 3.0, 1e-14);
}

TEST(Bernstein, PartitionOfUnityAndCount) {
  for (int d = 0; d <= 5; ++d) {
    EXPECT_EQ(bernstein::count(d), (d + 1) * (d + 2) / 2);
    const auto v = bernstein::eval(d, {0.2, 0.3, 0.5});
    EXPECT_NEAR(v.sum(), 1.0, 1e-14);
    for (const auto& m : bernstein::indices(d)) EXPECT_EQ(bernstein::indices(d)[bernstein::index_of(m)], m);
  }
}

TEST(Bernstein, GramMatchesIndependentQuadrature) {
  const Point2 a{0.1, 0.2}, b{1.3, 0.4}, c{0.5, 1.1};
  Triangulation m({a, b, c}, {Triangle{{0, 1, 2}}});
  const double area = m.area(0);
  for (int d : {1, 3, 4}) {
    const Eigen::MatrixXd G = bernstein::gram(d, area);
    const int N = bernstein::count(d);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const double ref = oracle::integrate_triangle(a, b, c, [&](Point2 p) {
          const auto v = bernstein::eval(d, m.barycentric(0, p));
          return v(i) * v(j);
        });
        EXPECT_NEAR(G(i, j), ref, 1e-13);
      }
  }
}

TEST(TriangleQuadrature, ExactForPolynomialsUpToDegree) {
  // \int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
  const auto rule = collapsed_gauss_rule(5);
  double wsum = 0.0;
  for (double w : rule.weights) wsum += w;
  EXPECT_NEAR(wsum, 1.0, 1e-14);
  auto fact = [](int k) { return std::tgamma(k + 1.0); };
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 8; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.points.size(); ++i)
        s += rule.weights[i] * 0.5 * std::pow(rule.points[i][1], a) * std::pow(rule.points[i][2], b);
      EXPECT_NEAR(s, fact(a) * fact(b) / fact(a + b + 2), 1e-14) << a << "," << b;
    }
}

TEST(BivariateBasis, GramIsIdentityUnderIndependentQuadrature) {
  const auto basis = BivariateBasis::build(square_hole_mesh(), 3, 1);
  const auto& mesh = basis.triangulation();
  const int nb = basis.size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nb, nb);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& V = mesh.vertices();
    for (int i = 0; i < nb; ++i)
      for (int j = i; j < nb; ++j) {
        const double v = oracle::integrate_triangle(V[tri.v[0]], V[tri.v[1]], V[tri.v[2]], [&](Point2 p) {
          const auto row = basis.evaluate_piece(static_cast<int>(t), p);
          return row(i) * row(j);
        }, 6);
        G(i, j) += v;
        if (i != j) G(j, i) += v;
      }
  }
  EXPECT_LT(max_abs(G - Eigen::MatrixXd::Identity(nb, nb)), 1e-8);
  EXPECT_TRUE(basis.gram_certified());
}

TEST(BivariateBasis, C1ContinuityAcrossSharedEdges) {
  const auto basis = BivariateBasis::build(square_hole_mesh(), 3, 1);
  const auto& mesh = basis.triangulation();
  double worst = 0.0;
  for (const auto& [edge, tris] : mesh.edge_adjacency()) {
    if (tris.size() != 2) continue;
    const Point2 a = mesh.vertices()[edge.first], b = mesh.vertices()[edge.second];
    for (double s : {0.0, 0.3, 0.71, 1.0}) {
      const Point2 p{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
      const auto v0 = basis.evaluate_piece(tris[0], p), v1 = basis.evaluate_piece(tris[1], p);
      worst = std::max(worst, max_abs(v0 - v1));
      for (int q = 0; q < basis.size(); ++q)
        for (auto [dx, dy] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}})
          worst = std::max(worst, std::abs(piece_derivative(basis, tris[0], p, dx, dy, q) -
                                           piece_derivative(basis, tris[1], p, dx, dy, q)));
    }
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(BivariateBasis, C0BasisIsNotC1) {
  const auto basis = BivariateBasis::build(square_hole_mesh(), 3, 0);
  const auto& mesh = basis.triangulation();
  double worst = 0.0;
  for (const auto& [edge, tris] : mesh.edge_adjacency()) {
    if (tris.size() != 2) continue;
    const Point2 a = mesh.vertices()[edge.first], b = mesh.vertices()[edge.second];
    const Point2 p{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    for (int q = 0; q < basis.size(); ++q)
      worst = std::max(worst, std::abs(piece_derivative(basis, tris[0], p, 1, 0, q) -
                                       piece_derivative(basis, tris[1], p, 1, 0, q)));
  }
  EXPECT_GT(worst, 1e-3);
  EXPECT_GT(basis.size(), BivariateBasis::build(square_hole_mesh(), 3, 1).size());
}

TEST(BivariateBasis, EnergyAnnihilatesAffineFunctions) {
  const auto basis = BivariateBasis::build(square_hole_mesh(), 3, 1);
  const Eigen::MatrixXd Gamma = energy_matrix(basis);
  EXPECT_LT(max_abs(Gamma - Gamma.transpose()), 1e-10);
  std::vector<Point2> pts;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j)
      if (in_sim_domain({0.1 * i, 0.1 * j})) pts.push_back({0.1 * i, 0.1 * j});
  const Eigen::MatrixXd B = basis.eval_design(pts);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int r = 0; r < 10; ++r) {
    const double c0 = z(rng), cx = z(rng), cy = z(rng);
    Eigen::VectorXd f(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) f(static_cast<Eigen::Index>(i)) = c0 + cx * pts[i].x + cy * pts[i].y;
    const Eigen::VectorXd theta = B.colPivHouseholderQr().solve(f);
    EXPECT_LT(max_abs(B * theta - f), 1e-10);
    EXPECT_LT(max_abs(Gamma * theta), 1e-10);
  }
}

TEST(BivariateBasis, EnergyOfQuadraticMatchesClosedForm) {
  // f = x^2 + x y: f_xx = 2, f_xy = 1, f_yy = 0 -> energy (4 + 2) * area
  const auto basis = BivariateBasis::build(unit_square(), 3, 1);
  std::vector<Point2> pts;
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) pts.push_back({0.1 * i, 0.1 * j});
  const Eigen::MatrixXd B = basis.eval_design(pts);
  Eigen::VectorXd f(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) f(static_cast<Eigen::Index>(i)) = pts[i].x * pts[i].x + pts[i].x * pts[i].y;
  const Eigen::VectorXd theta = B.colPivHouseholderQr().solve(f);
  EXPECT_NEAR(theta.dot(energy_matrix(basis) * theta), 6.0, 1e-9);
}

TEST(BivariateBasis, RejectsInvalidSmoothnessAndOutsidePoints) {
  EXPECT_THROW(BivariateBasis::build(unit_square(), 2, 2), ArgumentError);
  const auto basis = BivariateBasis::build(unit_square(), 2, 1);
  EXPECT_THROW(basis.evaluate({2.0, 2.0}), LocationError);
}

TEST(SimulationMesh, MatchesShippedMeshFile) {
  const auto file = Triangulation::from_file(std::string(SFPC_DATA_DIR) + "/meshes/square_hole.tri");
  const auto code = square_hole_mesh();
  ASSERT_EQ(file.vertices().size(), code.vertices().size());
  ASSERT_EQ(file.triangles().size(), code.triangles().size());
  for (std::size_t i = 0; i < file.vertices().size(); ++i) EXPECT_EQ(file.vertices()[i], code.vertices()[i]);
  for (std::size_t i = 0; i < file.triangles().size(); ++i) EXPECT_EQ(file.triangles()[i].v, code.triangles()[i].v);
}

TEST(TemporalBasis, LayoutAndValues) {
  TemporalSpec s;
  s.poly_degree = 3;
  s.knots = {5.0};
  s.fourier_harmonics = 1;
  s.period = 12;
  s.normalize = false;
  const auto b = TemporalBasis::build(s, 10);
  ASSERT_EQ(b.size(), 4 + 1 + 2);
  const Eigen::VectorXd c = b.eval(7.0);
  EXPECT_NEAR(c(0), 1.0, 1e-15);
  EXPECT_NEAR(c(1), 7.0, 1e-12);
  EXPECT_NEAR(c(2), 49.0, 1e-10);
  EXPECT_NEAR(c(3), 343.0, 1e-10);
  EXPECT_NEAR(c(4), 8.0, 1e-10);  // (7 - 5)^3
  EXPECT_NEAR(c(5), std::sin(2 * std::numbers::pi * 7 / 12), 1e-14);
  EXPECT_NEAR(c(6), std::cos(2 * std::numbers::pi * 7 / 12), 1e-14);
  EXPECT_NEAR(b.eval(3.0)(4), 0.0, 1e-15);
  EXPECT_EQ(b.design().rows(), 10);
  EXPECT_LT(max_abs(b.design().row(6).transpose() - c), 1e-15);
}

TEST(TemporalBasis, CurvatureMatrixMatchesNumericalIntegral) {
  TemporalSpec s;
  s.poly_degree = 3;
  s.knots = {20.0, 41.5};
  s.fourier_harmonics = 2;
  const int n = 60;
  const auto b = TemporalBasis::build(s, n);
  const Eigen::MatrixXd P = curvature_matrix(b);
  // Piecewise Gauss on unit intervals; knots fall on interval ends or midpoints.
  const auto g = oracle::legendre(12);
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(P.rows(), P.cols());
  for (double lo = 1.0; lo < n; lo += 0.5)
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const Eigen::VectorXd d2 = b.eval_second(lo + 0.5 * g.x[i]);
      ref += 0.5 * g.w[i] * d2 * d2.transpose();
    }
  EXPECT_LT(max_abs(P - ref), 1e-8 * std::max(1.0, max_abs(ref)));
}

TEST(TemporalBasis, SecondDerivativeMatchesDifferences) {
  TemporalSpec s;
  s.knots = {10.0};
  s.fourier_harmonics = 3;
  const auto b = TemporalBasis::build(s, 30);
  const double t = 17.3, h = 1e-3;
  const Eigen::VectorXd fd = (b.eval(t + h) - 2 * b.eval(t) + b.eval(t - h)) / (h * h);
  EXPECT_LT(max_abs(fd - b.eval_second(t)), 1e-4);
}

TEST(TemporalBasis, RejectsBadSpecs) {
  TemporalSpec s;
  s.knots = {40.0};
  EXPECT_THROW(TemporalBasis::build(s, 30), ArgumentError);
  s.knots = {10.0};
  s.poly_degree = 2;
  EXPECT_THROW(TemporalBasis::build(s, 30), ArgumentError);
  s.poly_degree = 3;
  s.knots.clear();
  s.fourier_harmonics = 1;
  s.period = 0.0;
  EXPECT_THROW(TemporalBasis::build(s, 30), ArgumentError);
}
