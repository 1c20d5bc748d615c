#include "sfpc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sfpc/error.hpp"

namespace sfpc {

double signed_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Barycentric barycentric(const Triangle& tri, std::span<const Point2> vertices, Point2 p) {
  const Point2 a = vertices[static_cast<std::size_t>(tri.v[0])];
  const Point2 b = vertices[static_cast<std::size_t>(tri.v[1])];
  const Point2 c = vertices[static_cast<std::size_t>(tri.v[2])];
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
    throw GeometryError("barycentric: degenerate triangle");
  }
  const double l2 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
  const double l3 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
  return {1.0 - l2 - l3, l2, l3};
}

Triangulation::Triangulation(std::vector<Point2> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (vertices_.empty() || triangles_.empty()) {
    throw GeometryError("triangulation needs at least one vertex and one triangle");
  }
  for (const auto& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw GeometryError("triangulation vertex has non-finite coordinates");
    }
  }
  bbox_ = {vertices_[0].x, vertices_[0].x, vertices_[0].y, vertices_[0].y};
  for (const auto& p : vertices_) {
    bbox_[0] = std::min(bbox_[0], p.x);
    bbox_[1] = std::max(bbox_[1], p.x);
    bbox_[2] = std::min(bbox_[2], p.y);
    bbox_[3] = std::max(bbox_[3], p.y);
  }
  diameter_ = std::hypot(bbox_[1] - bbox_[0], bbox_[3] - bbox_[2]);
  const double min_area = 1e-12 * diameter_ * diameter_;

  const int nv = static_cast<int>(vertices_.size());
  areas_.reserve(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      if (tri.v[k] < 0 || tri.v[k] >= nv) {
        throw GeometryError("triangle " + std::to_string(t) + " has an out-of-range vertex index");
      }
    }
    if (tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2]) {
      throw GeometryError("triangle " + std::to_string(t) + " repeats a vertex");
    }
    double a = signed_area(vertices_[tri.v[0]], vertices_[tri.v[1]], vertices_[tri.v[2]]);
    if (a < 0) {
      std::swap(tri.v[1], tri.v[2]);
      a = -a;
    }
    if (a < min_area) {
      throw GeometryError("triangle " + std::to_string(t) + " is degenerate (area " +
                          std::to_string(a) + ")");
    }
    areas_.push_back(a);
    for (int k = 0; k < 3; ++k) {
      edges_[make_edge(tri.v[k], tri.v[(k + 1) % 3])].push_back(static_cast<int>(t));
    }
  }
  for (const auto& [edge, owners] : edges_) {
    if (owners.size() > 2) {
      throw GeometryError("edge (" + std::to_string(edge.first) + "," + std::to_string(edge.second) +
                          ") is shared by more than two triangles");
    }
  }

  // Connectivity over shared edges.
  std::vector<int> parent(triangles_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const auto& [edge, owners] : edges_) {
    if (owners.size() == 2) parent[find(owners[0])] = find(owners[1]);
  }
  const int root = find(0);
  for (std::size_t t = 1; t < triangles_.size(); ++t) {
    if (find(static_cast<int>(t)) != root) {
      throw GeometryError("triangulation is not edge-connected");
    }
  }
}

double Triangulation::total_area() const { return std::accumulate(areas_.begin(), areas_.end(), 0.0); }

std::optional<int> Triangulation::locate(Point2 p) const {
  const double slack = 1e-9 * diameter_;
  if (p.x < bbox_[0] - slack || p.x > bbox_[1] + slack || p.y < bbox_[2] - slack || p.y > bbox_[3] + slack) {
    return std::nullopt;
  }
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto b = sfpc::barycentric(triangles_[t], vertices_, p);
    if (b[0] >= -kLocateTolerance && b[1] >= -kLocateTolerance && b[2] >= -kLocateTolerance) {
      return static_cast<int>(t);
    }
  }
  return std::nullopt;
}

Triangulation Triangulation::read(std::istream& in) {
  long nv = 0, nt = 0;
  if (!(in >> nv >> nt) || nv <= 0 || nt <= 0) {
    throw ParseError("triangulation: expected header 'V T' with positive counts");
  }
  std::vector<Point2> vertices(static_cast<std::size_t>(nv));
  for (auto& p : vertices) {
    if (!(in >> p.x >> p.y)) throw ParseError("triangulation: truncated vertex list");
  }
  std::vector<Triangle> triangles(static_cast<std::size_t>(nt));
  for (auto& tri : triangles) {
    if (!(in >> tri.v[0] >> tri.v[1] >> tri.v[2])) throw ParseError("triangulation: truncated triangle list");
  }
  return Triangulation(std::move(vertices), std::move(triangles));
}

Triangulation Triangulation::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open triangulation file '" + path + "'");
  return read(in);
}

void Triangulation::write(std::ostream& out) const {
  out << vertices_.size() << ' ' << triangles_.size() << '\n';
  out << std::setprecision(17);
  for (const auto& p : vertices_) out << p.x << ' ' << p.y << '\n';
  for (const auto& t : triangles_) out << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << '\n';
}

}  // namespace sfpc
