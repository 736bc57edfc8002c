#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyvem/errors.hpp"

namespace polyvem {

using Point = Eigen::Vector2d;

/// Signed area of a closed polygon (positive when counterclockwise).
inline double signed_area(std::span<const Point> poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

inline double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

namespace detail {

inline int orient(const Point& a, const Point& b, const Point& c, double tol) {
  const double v = cross2(b - a, c - a);
  if (v > tol) return 1;
  if (v < -tol) return -1;
  return 0;
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

// Closed-segment intersection test with a scale-aware collinearity tolerance.
inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double scale = std::max({(p2 - p1).squaredNorm(), (q2 - q1).squaredNorm(), 1e-300});
  const double tol = 1e-14 * scale;
  const int o1 = orient(p1, p2, q1, tol);
  const int o2 = orient(p1, p2, q2, tol);
  const int o3 = orient(q1, q2, p1, tol);
  const int o4 = orient(q1, q2, p2, tol);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace detail

/// True when no two non-adjacent sides of the polygon touch.
inline bool is_simple_polygon(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    if ((b - a).squaredNorm() == 0.0) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (detail::segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Mesh edge stored with a global orientation: v[0] < v[1]. The global unit
/// normal is the tangent (v[0] -> v[1]) rotated by -90 degrees, n = (t_y, -t_x).
struct MeshEdge {
  std::array<int, 2> v;
};

/// Conforming polygonal mesh of a planar domain. Cells are counterclockwise
/// vertex cycles; edges, cell-edge incidence, orientation signs and boundary
/// flags are derived at construction. Immutable afterwards.
class PolygonalMesh {
 public:
  PolygonalMesh() = default;

  PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells)
      : vertices_(std::move(vertices)), cells_(std::move(cells)) {
    build();
  }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_cells() const { return cells_.size(); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  const std::vector<int>& cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }
  const std::vector<MeshEdge>& edges() const { return edges_; }
  const MeshEdge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

  /// Global edge index of local edge i of cell c (from cell vertex i to i+1).
  const std::vector<int>& cell_edges(int c) const { return cell_edges_[static_cast<std::size_t>(c)]; }
  /// +1 when the global edge normal points out of cell c, -1 otherwise.
  const std::vector<int>& cell_edge_signs(int c) const { return cell_edge_signs_[static_cast<std::size_t>(c)]; }
  /// The (one or two) cells sharing an edge; second entry is -1 on the boundary.
  const std::array<int, 2>& edge_cells(int e) const { return edge_cells_[static_cast<std::size_t>(e)]; }

  bool is_boundary_vertex(int v) const { return boundary_vertex_[static_cast<std::size_t>(v)] != 0; }
  bool is_boundary_edge(int e) const { return edge_cells_[static_cast<std::size_t>(e)][1] < 0; }

  std::vector<Point> cell_points(int c) const {
    std::vector<Point> pts;
    pts.reserve(cell(c).size());
    for (int v : cell(c)) pts.push_back(vertex(v));
    return pts;
  }

  double edge_length(int e) const { return (vertex(edge(e).v[1]) - vertex(edge(e).v[0])).norm(); }

  /// Unit normal of edge e in its global orientation.
  Point edge_normal(int e) const {
    const Point t = (vertex(edge(e).v[1]) - vertex(edge(e).v[0])).normalized();
    return Point(t.y(), -t.x());
  }

  Point edge_midpoint(int e) const { return 0.5 * (vertex(edge(e).v[0]) + vertex(edge(e).v[1])); }

  /// Largest cell diameter.
  double mesh_size() const {
    double h = 0.0;
    for (const auto& c : cells_) {
      for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j)
          h = std::max(h, (vertex(c[i]) - vertex(c[j])).norm());
    }
    return h;
  }

  /// Index of a cell containing p, or -1.
  int locate(const Point& p) const {
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const auto& cv = cells_[c];
      bool inside = true;
      // Cells may be non-convex; use winding via crossing number.
      int crossings = 0;
      for (std::size_t i = 0; i < cv.size(); ++i) {
        const Point& a = vertex(cv[i]);
        const Point& b = vertex(cv[(i + 1) % cv.size()]);
        if (((a.y() > p.y()) != (b.y() > p.y())) &&
            p.x() <= a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y()))
          ++crossings;
        // Points on the boundary count as inside.
        if (std::abs(cross2(b - a, p - a)) <= 1e-14 * (b - a).squaredNorm() && detail::on_segment(a, b, p))
          return static_cast<int>(c);
      }
      inside = (crossings % 2) == 1;
      if (inside) return static_cast<int>(c);
    }
    return -1;
  }

 private:
  void build() {
    const int nv = static_cast<int>(vertices_.size());
    std::vector<char> used(vertices_.size(), 0);
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> incidence;  // (lo,hi) -> (cell, local)
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const auto& cv = cells_[c];
      if (cv.size() < 3)
        throw TopologyError("cell " + std::to_string(c) + " has fewer than 3 vertices");
      for (int v : cv) {
        if (v < 0 || v >= nv)
          throw TopologyError("cell " + std::to_string(c) + " references vertex " + std::to_string(v) +
                              " out of range");
        used[static_cast<std::size_t>(v)] = 1;
      }
      std::vector<int> sorted = cv;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw TopologyError("cell " + std::to_string(c) + " repeats a vertex");
      const auto pts = cell_points(static_cast<int>(c));
      if (!(signed_area(pts) > 0.0))
        throw GeometryError("cell " + std::to_string(c) + " is not counterclockwise (signed area <= 0)");
      if (!is_simple_polygon(pts))
        throw GeometryError("cell " + std::to_string(c) + " is not a simple polygon");
      for (std::size_t i = 0; i < cv.size(); ++i) {
        const int a = cv[i];
        const int b = cv[(i + 1) % cv.size()];
        incidence[{std::min(a, b), std::max(a, b)}].push_back({static_cast<int>(c), static_cast<int>(i)});
      }
    }
    for (int v = 0; v < nv; ++v)
      if (!used[static_cast<std::size_t>(v)])
        throw TopologyError("vertex " + std::to_string(v) + " belongs to no cell");

    cell_edges_.assign(cells_.size(), {});
    cell_edge_signs_.assign(cells_.size(), {});
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      cell_edges_[c].assign(cells_[c].size(), -1);
      cell_edge_signs_[c].assign(cells_[c].size(), 0);
    }
    boundary_vertex_.assign(vertices_.size(), 0);
    edges_.clear();
    edge_cells_.clear();
    edges_.reserve(incidence.size());
    for (const auto& [key, users] : incidence) {  // std::map iterates in sorted (lo,hi) order
      if (users.size() > 2)
        throw TopologyError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                            ") is shared by more than two cells");
      const int e = static_cast<int>(edges_.size());
      edges_.push_back(MeshEdge{{key.first, key.second}});
      std::array<int, 2> ec{-1, -1};
      int prev_sign = 0;
      for (std::size_t k = 0; k < users.size(); ++k) {
        const auto [c, i] = users[k];
        const auto& cv = cells_[static_cast<std::size_t>(c)];
        const int a = cv[static_cast<std::size_t>(i)];
        const int sign = a == key.first ? 1 : -1;
        if (k == 1 && sign == prev_sign)
          throw TopologyError("cells " + std::to_string(ec[0]) + " and " + std::to_string(c) +
                              " traverse a shared edge in the same direction");
        prev_sign = sign;
        ec[k] = c;
        cell_edges_[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = e;
        cell_edge_signs_[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = sign;
      }
      edge_cells_.push_back(ec);
      if (users.size() == 1) {
        boundary_vertex_[static_cast<std::size_t>(key.first)] = 1;
        boundary_vertex_[static_cast<std::size_t>(key.second)] = 1;
      }
    }
  }

  std::vector<Point> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<int>> cell_edges_;
  std::vector<std::vector<int>> cell_edge_signs_;
  std::vector<std::array<int, 2>> edge_cells_;
  std::vector<char> boundary_vertex_;
};

}  // namespace polyvem
