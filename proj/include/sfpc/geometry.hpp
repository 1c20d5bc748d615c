#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sfpc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Three vertex indices into a triangulation's vertex list.
struct Triangle {
  std::array<int, 3> v{};
};

using Barycentric = std::array<double, 3>;

/// Barycentric coordinates of `p` relative to `tri`. Works for points outside
/// the triangle (some coordinates are then negative).
Barycentric barycentric(const Triangle& tri, std::span<const Point2> vertices, Point2 p);

/// Undirected edge, stored with the smaller vertex index first.
using Edge = std::pair<int, int>;

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// A triangulated planar domain. Triangles are re-oriented counter-clockwise
/// at construction; degenerate triangles are rejected.
class Triangulation {
 public:
  static constexpr double kLocateTolerance = 1e-12;

  Triangulation() = default;
  Triangulation(std::vector<Point2> vertices, std::vector<Triangle> triangles);

  /// Reads the plain-text format: `V T`, then V lines `x y`, then T lines `i j k`.
  static Triangulation read(std::istream& in);
  static Triangulation from_file(const std::string& path);
  void write(std::ostream& out) const;

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  std::size_t num_triangles() const { return triangles_.size(); }

  /// Every undirected edge mapped to the (one or two) triangles containing it,
  /// in increasing triangle order.
  const std::map<Edge, std::vector<int>>& edge_adjacency() const { return edges_; }

  double area(int t) const { return areas_[static_cast<std::size_t>(t)]; }
  double total_area() const;
  double diameter() const { return diameter_; }

  /// Lowest-index triangle whose barycentric coordinates of `p` are all
  /// >= -kLocateTolerance, or nullopt when `p` lies outside the domain.
  std::optional<int> locate(Point2 p) const;
  bool contains(Point2 p) const { return locate(p).has_value(); }

  Barycentric barycentric(int t, Point2 p) const {
    return sfpc::barycentric(triangles_[static_cast<std::size_t>(t)], vertices_, p);
  }

 private:
  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<double> areas_;
  std::map<Edge, std::vector<int>> edges_;
  double diameter_ = 0.0;
  std::array<double, 4> bbox_{};  // xmin, xmax, ymin, ymax
};

double signed_area(Point2 a, Point2 b, Point2 c);

}  // namespace sfpc
