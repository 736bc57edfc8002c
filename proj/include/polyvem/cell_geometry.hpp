#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "polyvem/mesh.hpp"
#include "polyvem/quadrature.hpp"

namespace polyvem {

struct EdgeGeometry {
  double length = 0.0;
  Point normal;    // unit outward normal
  Point tangent;   // unit tangent along the counterclockwise traversal
  Point midpoint;
  Point start, end;  // traversal endpoints
  int global = -1;   // global edge index (-1 for standalone polygons)
  int sign = 1;      // converts the global edge orientation to outward
};

/// Geometric data of one polygonal cell; feeds every local operator.
struct CellGeometry {
  double area = 0.0;
  Point centroid;
  double diameter = 0.0;
  double perimeter = 0.0;
  std::vector<Point> vertices;
  std::vector<EdgeGeometry> edges;  // edge i runs from vertex i to vertex i+1
  std::vector<std::array<Point, 3>> fan;  // (centroid, V_i, V_i+1)

  std::size_t num_vertices() const { return vertices.size(); }

  /// Integral of f over the cell by the degree-4 rule on the centroid fan.
  template <class F>
  double integrate(F&& f) const {
    return fan_quadrature(std::span<const Point>(vertices), centroid, std::forward<F>(f));
  }
};

/// Builds the geometry of a counterclockwise polygon. When global edge data is
/// absent every edge is treated as globally oriented along the traversal.
inline CellGeometry make_cell_geometry(std::vector<Point> vertices, const std::vector<int>& global_edges = {},
                                       const std::vector<int>& signs = {}, const std::string& name = "cell") {
  CellGeometry g;
  const std::size_t n = vertices.size();
  if (n < 3) throw GeometryError(name + ": fewer than 3 vertices");
  if (!is_simple_polygon(vertices)) throw GeometryError(name + ": not a simple polygon");
  const double a = signed_area(vertices);
  if (!(a > 0.0)) throw GeometryError(name + ": zero or negative area");
  g.area = a;

  // Centroid via the shoelace moments, computed relative to vertex 0 for accuracy.
  const Point o = vertices[0];
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = vertices[i] - o;
    const Point q = vertices[(i + 1) % n] - o;
    const double c = p.x() * q.y() - q.x() * p.y();
    cx += (p.x() + q.x()) * c;
    cy += (p.y() + q.y()) * c;
  }
  g.centroid = o + Point(cx, cy) / (6.0 * a);

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.diameter = std::max(g.diameter, (vertices[i] - vertices[j]).norm());

  g.edges.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    EdgeGeometry& e = g.edges[i];
    e.start = vertices[i];
    e.end = vertices[(i + 1) % n];
    const Point d = e.end - e.start;
    e.length = d.norm();
    e.tangent = d / e.length;
    e.normal = Point(e.tangent.y(), -e.tangent.x());
    e.midpoint = 0.5 * (e.start + e.end);
    e.global = global_edges.empty() ? -1 : global_edges[i];
    e.sign = signs.empty() ? 1 : signs[i];
    g.perimeter += e.length;
  }
  g.fan.reserve(n);
  for (std::size_t i = 0; i < n; ++i) g.fan.push_back({g.centroid, vertices[i], vertices[(i + 1) % n]});
  g.vertices = std::move(vertices);
  return g;
}

inline std::vector<CellGeometry> compute_geometry(const PolygonalMesh& mesh) {
  std::vector<CellGeometry> out;
  out.reserve(mesh.num_cells());
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c)
    out.push_back(make_cell_geometry(mesh.cell_points(c), mesh.cell_edges(c), mesh.cell_edge_signs(c),
                                     "cell " + std::to_string(c)));
  return out;
}

/// Shape diagnostics for the uniform-scaling and star-shapedness assumptions.
struct RegularityReport {
  std::vector<double> min_edge_ratio;  // min |E| / h_P per cell
  std::vector<bool> star_shaped;       // centroid-fan heuristic per cell
  std::size_t max_vertices = 0;

  double min_ratio() const {
    return min_edge_ratio.empty() ? 0.0 : *std::min_element(min_edge_ratio.begin(), min_edge_ratio.end());
  }
  std::size_t count_below(double rho) const {
    return static_cast<std::size_t>(
        std::count_if(min_edge_ratio.begin(), min_edge_ratio.end(), [rho](double r) { return r < rho; }));
  }
  bool all_star_shaped() const { return std::all_of(star_shaped.begin(), star_shaped.end(), [](bool b) { return b; }); }
};

inline constexpr double kDefaultRegularityRho = 0.05;

inline bool centroid_fan_is_star(const CellGeometry& g) {
  for (const auto& t : g.fan) {
    const double area = 0.5 * cross2(t[1] - t[0], t[2] - t[0]);
    const double perim = (t[1] - t[0]).norm() + (t[2] - t[1]).norm() + (t[0] - t[2]).norm();
    if (!(area > 0.0)) return false;
    if (2.0 * area / perim < 1e-3 * g.diameter) return false;
  }
  return true;
}

inline RegularityReport check_regularity(const PolygonalMesh& mesh, const std::vector<CellGeometry>& geometry) {
  RegularityReport r;
  r.min_edge_ratio.reserve(geometry.size());
  for (const auto& g : geometry) {
    double m = 1.0;
    for (const auto& e : g.edges) m = std::min(m, e.length / g.diameter);
    r.min_edge_ratio.push_back(m);
    r.star_shaped.push_back(centroid_fan_is_star(g));
  }
  for (const auto& c : mesh.cells()) r.max_vertices = std::max(r.max_vertices, c.size());
  return r;
}

}  // namespace polyvem
