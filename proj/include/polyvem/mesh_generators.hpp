#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "polyvem/cell_geometry.hpp"
#include "polyvem/mesh.hpp"

namespace polyvem {

namespace detail {

// Uniform double in [0,1) from the raw 64-bit engine output; independent of
// the standard library's distribution implementation.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::vector<Point> clip_halfplane(const std::vector<Point>& poly, const Point& n, double c) {
  // Keeps {x : n.x <= c}. Vertices within tol of the line count as inside.
  const double tol = 1e-14 * std::max(1.0, n.norm());
  std::vector<Point> out;
  out.reserve(poly.size() + 1);
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % m];
    const double dp = n.dot(p) - c;
    const double dq = n.dot(q) - c;
    if (dp <= tol) out.push_back(p);
    if ((dp < -tol && dq > tol) || (dp > tol && dq < -tol)) {
      const double t = dp / (dp - dq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

}  // namespace detail

/// Structured triangulation of [-1,1]^2: n x n squares, each split along the
/// diagonal into two triangles.
inline PolygonalMesh generate_triangular_mesh(int n) {
  if (n < 1) throw InvalidParameter("triangular mesh: n must be >= 1");
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n);
  std::vector<std::vector<int>> cells;
  cells.reserve(static_cast<std::size_t>(2 * n * n));
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return PolygonalMesh(std::move(v), std::move(cells));
}

/// n x n quadrilaterals on [-1,1]^2 with interior vertices displaced uniformly
/// in [-delta h, delta h]^2, h = 2/n. A displacement that breaks the centroid
/// fan of an adjacent cell is re-drawn.
inline PolygonalMesh generate_perturbed_quad_mesh(int n, double delta, std::uint64_t seed) {
  if (n < 1) throw InvalidParameter("perturbed quad mesh: n must be >= 1");
  if (!(delta >= 0.0) || delta >= 0.5) throw InvalidParameter("perturbed quad mesh: delta must lie in [0, 0.5)");
  const double h = 2.0 / n;
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(-1.0 + h * i, -1.0 + h * j);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::vector<int>> cells;
  cells.reserve(static_cast<std::size_t>(n * n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});

  auto cell_ok = [&](int ci, int cj) {
    if (ci < 0 || cj < 0 || ci >= n || cj >= n) return true;
    std::vector<Point> pts;
    for (int k : cells[static_cast<std::size_t>(cj * n + ci)]) pts.push_back(v[static_cast<std::size_t>(k)]);
    if (!(signed_area(pts) > 0.0) || !is_simple_polygon(pts)) return false;
    return centroid_fan_is_star(make_cell_geometry(pts));
  };

  std::mt19937_64 rng(seed);
  if (delta > 0.0) {
    for (int j = 1; j < n; ++j)
      for (int i = 1; i < n; ++i) {
        const Point base = v[static_cast<std::size_t>(id(i, j))];
        bool accepted = false;
        for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
          const double dx = detail::uniform(rng, -delta * h, delta * h);
          const double dy = detail::uniform(rng, -delta * h, delta * h);
          v[static_cast<std::size_t>(id(i, j))] = base + Point(dx, dy);
          accepted = cell_ok(i - 1, j - 1) && cell_ok(i, j - 1) && cell_ok(i - 1, j) && cell_ok(i, j);
        }
        if (!accepted) v[static_cast<std::size_t>(id(i, j))] = base;
      }
  }
  return PolygonalMesh(std::move(v), std::move(cells));
}

/// Voronoi cells of the given sites clipped to [-1,1]^2 (one polygon per site).
/// Neighbours are visited in rings of a bucket grid; clipping stops once every
/// remaining site is farther than twice the current cell radius.
inline std::vector<std::vector<Point>> clipped_voronoi_cells(const std::vector<Point>& sites) {
  const std::vector<Point> square{{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}};
  const std::size_t n = sites.size();
  const int nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n) / 2.0)));
  const double bw = 2.0 / nb;
  auto bucket_of = [&](double t) { return std::clamp(static_cast<int>(std::floor((t + 1.0) / bw)), 0, nb - 1); };
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(nb * nb));
  for (std::size_t j = 0; j < n; ++j)
    buckets[static_cast<std::size_t>(bucket_of(sites[j].y()) * nb + bucket_of(sites[j].x()))].push_back(j);

  std::vector<std::vector<Point>> cells(n);
  std::vector<std::pair<double, std::size_t>> ring;
  for (std::size_t i = 0; i < n; ++i) {
    const int bx = bucket_of(sites[i].x()), by = bucket_of(sites[i].y());
    std::vector<Point> poly = square;
    for (int k = 0; k <= nb; ++k) {
      double r2 = 0.0;
      for (const auto& p : poly) r2 = std::max(r2, (p - sites[i]).squaredNorm());
      // Sites in ring k are at least (k - 1) bucket widths away.
      const double lo = std::max(0, k - 1) * bw;
      if (lo * lo > 4.0 * r2 * (1.0 + 1e-12)) break;
      ring.clear();
      for (int y = by - k; y <= by + k; ++y)
        for (int x = bx - k; x <= bx + k; ++x) {
          if (std::max(std::abs(x - bx), std::abs(y - by)) != k) continue;
          if (x < 0 || y < 0 || x >= nb || y >= nb) continue;
          for (std::size_t j : buckets[static_cast<std::size_t>(y * nb + x)])
            if (j != i) ring.emplace_back((sites[j] - sites[i]).squaredNorm(), j);
        }
      std::sort(ring.begin(), ring.end());
      for (const auto& [d2, j] : ring) {
        const Point nrm = sites[j] - sites[i];
        poly = detail::clip_halfplane(poly, nrm, nrm.dot(0.5 * (sites[i] + sites[j])));
        if (poly.size() < 3) break;
      }
      if (poly.size() < 3) break;
    }
    cells[i] = std::move(poly);
  }
  return cells;
}

namespace detail {

inline std::optional<PolygonalMesh> voronoi_mesh_from_sites(std::vector<Point> sites, int lloyd_iters) {
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      if ((sites[i] - sites[j]).norm() < 1e-8) return std::nullopt;

  auto polys = clipped_voronoi_cells(sites);
  for (int it = 0; it < lloyd_iters; ++it) {
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (polys[i].size() < 3) return std::nullopt;
      sites[i] = make_cell_geometry(polys[i]).centroid;
    }
    polys = clipped_voronoi_cells(sites);
  }

  // Merge the per-cell vertex copies into a shared vertex list.
  const double tol = 1e-9;
  const double bucket = 1e-6;
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  auto key = [&](std::int64_t ix, std::int64_t iy) { return ix * 4000003LL + iy; };
  std::vector<Point> verts;
  std::vector<std::vector<int>> cells;
  auto snap = [](double t) {
    if (std::abs(t - 1.0) < 1e-12) return 1.0;
    if (std::abs(t + 1.0) < 1e-12) return -1.0;
    return t;
  };
  auto find_or_add = [&](Point p) {
    p = Point(snap(p.x()), snap(p.y()));
    const auto ix = static_cast<std::int64_t>(std::floor((p.x() + 2.0) / bucket));
    const auto iy = static_cast<std::int64_t>(std::floor((p.y() + 2.0) / bucket));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find(key(ix + dx, iy + dy));
        if (it == grid.end()) continue;
        for (int k : it->second)
          if ((verts[static_cast<std::size_t>(k)] - p).norm() < tol) return k;
      }
    const int k = static_cast<int>(verts.size());
    verts.push_back(p);
    grid[key(ix, iy)].push_back(k);
    return k;
  };
  for (const auto& poly : polys) {
    if (poly.size() < 3) return std::nullopt;
    std::vector<int> c;
    for (const auto& p : poly) {
      const int k = find_or_add(p);
      if (c.empty() || c.back() != k) c.push_back(k);
    }
    while (c.size() > 1 && c.front() == c.back()) c.pop_back();
    if (c.size() < 3) return std::nullopt;
    cells.push_back(std::move(c));
  }
  try {
    PolygonalMesh mesh(std::move(verts), std::move(cells));
    double area = 0.0;
    for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) area += signed_area(mesh.cell_points(c));
    if (std::abs(area - 4.0) > 1e-10) return std::nullopt;
    // Every edge must be interior (two cells) or lie on the square boundary.
    for (int e = 0; e < static_cast<int>(mesh.num_edges()); ++e) {
      if (!mesh.is_boundary_edge(e)) continue;
      const Point a = mesh.vertex(mesh.edge(e).v[0]);
      const Point b = mesh.vertex(mesh.edge(e).v[1]);
      const bool on_side = (a.x() == b.x() && std::abs(a.x()) == 1.0) || (a.y() == b.y() && std::abs(a.y()) == 1.0);
      if (!on_side) return std::nullopt;
    }
    return mesh;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Voronoi mesh of explicit sites (the seed-override hook) after
/// lloyd_iters centroidal relaxation sweeps.
inline PolygonalMesh generate_voronoi_mesh_from_sites(const std::vector<Point>& sites, int lloyd_iters) {
  if (sites.size() < 4) throw InvalidParameter("voronoi mesh: need at least 4 sites");
  auto m = detail::voronoi_mesh_from_sites(sites, lloyd_iters);
  if (!m) throw GeometryError("voronoi mesh: degenerate site set");
  return *std::move(m);
}

/// Voronoi mesh of n_seeds uniformly random sites in [-1,1]^2, clipped to the
/// square and relaxed by lloyd_iters Lloyd sweeps. Degenerate draws are
/// regenerated from the same engine.
inline PolygonalMesh generate_voronoi_mesh(int n_seeds, int lloyd_iters, std::uint64_t seed) {
  if (n_seeds < 4) throw InvalidParameter("voronoi mesh: n_seeds must be >= 4");
  if (lloyd_iters < 0) throw InvalidParameter("voronoi mesh: lloyd_iters must be >= 0");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Point> sites;
    sites.reserve(static_cast<std::size_t>(n_seeds));
    for (int i = 0; i < n_seeds; ++i) {
      const double x = detail::uniform(rng, -1.0, 1.0);
      const double y = detail::uniform(rng, -1.0, 1.0);
      sites.emplace_back(x, y);
    }
    if (auto m = detail::voronoi_mesh_from_sites(std::move(sites), lloyd_iters)) return *std::move(m);
  }
  throw GeometryError("voronoi mesh: regeneration failed 100 times");
}

enum class MeshFamily { Triangular, PerturbedQuad, Voronoi };

inline const char* to_string(MeshFamily f) {
  switch (f) {
    case MeshFamily::Triangular: return "triangular";
    case MeshFamily::PerturbedQuad: return "perturbed_quad";
    case MeshFamily::Voronoi: return "voronoi";
  }
  return "?";
}

inline MeshFamily parse_mesh_family(const std::string& s) {
  if (s == "triangular" || s == "tri") return MeshFamily::Triangular;
  if (s == "perturbed_quad" || s == "quad") return MeshFamily::PerturbedQuad;
  if (s == "voronoi") return MeshFamily::Voronoi;
  throw InvalidParameter("unknown mesh family '" + s + "'");
}

struct FamilyParams {
  double delta = 0.2;     // perturbed quads
  int lloyd_iters = 100;  // voronoi: close to a centroidal tessellation
  std::uint64_t seed = 1;
};

/// Level-n member of a family: n x n squares (two triangles each), n x n
/// perturbed quads, or n^2 Voronoi sites.
inline PolygonalMesh generate_family_mesh(MeshFamily f, int n, const FamilyParams& p = {}) {
  switch (f) {
    case MeshFamily::Triangular: return generate_triangular_mesh(n);
    case MeshFamily::PerturbedQuad: return generate_perturbed_quad_mesh(n, p.delta, p.seed);
    case MeshFamily::Voronoi:
      if (n < 2) throw InvalidParameter("voronoi family: n must be >= 2");
      return generate_voronoi_mesh(n * n, p.lloyd_iters, p.seed);
  }
  throw InvalidParameter("unknown mesh family");
}

}  // namespace polyvem
