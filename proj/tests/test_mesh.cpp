#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "polyvem/cell_geometry.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/mesh_generators.hpp"
#include "polyvem/mesh_io.hpp"

using namespace polyvem;

namespace {

double total_area(const PolygonalMesh& m) {
  double a = 0.0;
  for (int c = 0; c < static_cast<int>(m.num_cells()); ++c) a += signed_area(m.cell_points(c));
  return a;
}

std::vector<PolygonalMesh> sample_meshes() {
  return {generate_triangular_mesh(1),       generate_triangular_mesh(5),
          generate_perturbed_quad_mesh(1, 0.2, 3), generate_perturbed_quad_mesh(7, 0.3, 5),
          generate_voronoi_mesh(10, 0, 4),   generate_voronoi_mesh(64, 3, 2),
          generate_family_mesh(MeshFamily::Voronoi, 6)};
}

}  // namespace

TEST(Mesh, TriangularCounts) {
  const auto m1 = generate_triangular_mesh(1);
  EXPECT_EQ(m1.num_cells(), 2u);
  EXPECT_EQ(m1.num_vertices(), 4u);
  EXPECT_EQ(m1.num_edges(), 5u);
  const auto m2 = generate_triangular_mesh(2);
  EXPECT_EQ(m2.num_cells(), 8u);
  EXPECT_EQ(m2.num_vertices(), 9u);
  EXPECT_NEAR(total_area(generate_triangular_mesh(4)), 4.0, 1e-14);
  EXPECT_THROW(generate_triangular_mesh(0), InvalidParameter);
}

TEST(Mesh, PerturbedQuads) {
  const auto m = generate_perturbed_quad_mesh(3, 0.0, 1);
  for (int c = 0; c < 9; ++c) EXPECT_NEAR(signed_area(m.cell_points(c)), 4.0 / 9.0, 1e-14);
  const auto a = generate_perturbed_quad_mesh(3, 0.2, 7);
  const auto b = generate_perturbed_quad_mesh(3, 0.2, 7);
  ASSERT_EQ(a.num_vertices(), b.num_vertices());
  for (std::size_t i = 0; i < a.num_vertices(); ++i) {
    EXPECT_EQ(a.vertex(static_cast<int>(i)).x(), b.vertex(static_cast<int>(i)).x());
    EXPECT_EQ(a.vertex(static_cast<int>(i)).y(), b.vertex(static_cast<int>(i)).y());
  }
  EXPECT_NEAR(total_area(generate_perturbed_quad_mesh(8, 0.2, 1)), 4.0, 1e-12);
  EXPECT_THROW(generate_perturbed_quad_mesh(4, 0.5, 1), InvalidParameter);
  // Boundary vertices stay on the square, interior displacements stay in the box.
  const auto p = generate_perturbed_quad_mesh(6, 0.3, 11);
  const double h = 2.0 / 6;
  for (int j = 0; j <= 6; ++j)
    for (int i = 0; i <= 6; ++i) {
      const Point base(-1.0 + i * h, -1.0 + j * h);
      const Point& v = p.vertex(j * 7 + i);
      EXPECT_LE((v - base).lpNorm<Eigen::Infinity>(), 0.3 * h + 1e-15);
      if (i == 0 || j == 0 || i == 6 || j == 6) EXPECT_EQ((v - base).norm(), 0.0);
    }
}

TEST(Mesh, VoronoiQuadrantSites) {
  const auto m = generate_voronoi_mesh_from_sites({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}, 0);
  ASSERT_EQ(m.num_cells(), 4u);
  for (int c = 0; c < 4; ++c) {
    const auto g = make_cell_geometry(m.cell_points(c));
    EXPECT_EQ(m.cell(c).size(), 4u);
    EXPECT_NEAR(g.area, 1.0, 1e-14);
    EXPECT_NEAR(g.diameter, std::sqrt(2.0), 1e-14);
  }
}

TEST(Mesh, VoronoiAreaConvexityDeterminism) {
  const auto m = generate_voronoi_mesh(64, 3, 2);
  EXPECT_EQ(m.num_cells(), 64u);
  EXPECT_NEAR(total_area(m), 4.0, 1e-10);
  for (int c = 0; c < 64; ++c) {
    const auto pts = m.cell_points(c);
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_GE(cross2(pts[(i + 1) % n] - pts[i], pts[(i + 2) % n] - pts[(i + 1) % n]), -1e-14);
  }
  const auto m2 = generate_voronoi_mesh(64, 3, 2);
  ASSERT_EQ(m.num_vertices(), m2.num_vertices());
  for (int v = 0; v < static_cast<int>(m.num_vertices()); ++v) EXPECT_EQ((m.vertex(v) - m2.vertex(v)).norm(), 0.0);
  EXPECT_THROW(generate_voronoi_mesh(3, 0, 1), InvalidParameter);
}

TEST(Mesh, VoronoiClippingMatchesBruteForce) {
  // Oracle: clip the square against every other site's bisector, no pruning.
  std::mt19937_64 rng(5);
  std::vector<Point> sites;
  for (int i = 0; i < 150; ++i) sites.emplace_back(detail::uniform(rng, -1, 1), detail::uniform(rng, -1, 1));
  const auto cells = clipped_voronoi_cells(sites);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::vector<Point> poly{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    for (std::size_t j = 0; j < sites.size(); ++j) {
      if (j == i) continue;
      const Point n = sites[j] - sites[i];
      poly = detail::clip_halfplane(poly, n, n.dot(0.5 * (sites[i] + sites[j])));
    }
    EXPECT_NEAR(signed_area(poly), signed_area(cells[i]), 1e-13);
  }
}

TEST(Mesh, EulerAndClosedPolygons) {
  for (const auto& m : sample_meshes()) {
    EXPECT_NEAR(total_area(m), 4.0, 1e-10);
    // V - E + F = 1 counting cells only.
    EXPECT_EQ(static_cast<long>(m.num_vertices()) - static_cast<long>(m.num_edges()) +
                  static_cast<long>(m.num_cells()),
              1);
    for (const auto& g : compute_geometry(m)) {
      Point s = Point::Zero();
      for (const auto& e : g.edges) s += e.length * e.normal;
      EXPECT_LE(s.lpNorm<Eigen::Infinity>(), 1e-13 * g.perimeter);
    }
    // Interior edges are shared by two cells with opposite traversal, boundary edges lie on the square.
    for (int e = 0; e < static_cast<int>(m.num_edges()); ++e) {
      const auto ec = m.edge_cells(e);
      if (ec[1] < 0) {
        const Point mid = m.edge_midpoint(e);
        EXPECT_NEAR(std::max(std::abs(mid.x()), std::abs(mid.y())), 1.0, 1e-14);
      }
    }
  }
}

TEST(Mesh, EdgeOrientationAndSigns) {
  const auto m = generate_perturbed_quad_mesh(4, 0.25, 9);
  for (int e = 0; e < static_cast<int>(m.num_edges()); ++e) {
    const auto [a, b] = m.edge(e).v;
    EXPECT_LT(a, b);
    const Point t = (m.vertex(b) - m.vertex(a)).normalized();
    const Point n = m.edge_normal(e);
    EXPECT_NEAR(n.x(), t.y(), 1e-15);
    EXPECT_NEAR(n.y(), -t.x(), 1e-15);
  }
  const auto geom = compute_geometry(m);
  for (int c = 0; c < static_cast<int>(m.num_cells()); ++c) {
    for (std::size_t i = 0; i < m.cell(c).size(); ++i) {
      const auto& eg = geom[static_cast<std::size_t>(c)].edges[i];
      // outward normal points away from the centroid
      EXPECT_GT(eg.normal.dot(eg.midpoint - geom[static_cast<std::size_t>(c)].centroid), 0.0);
      const Point glob = m.edge_normal(eg.global);
      EXPECT_NEAR((eg.sign * glob - eg.normal).norm(), 0.0, 1e-14);
    }
  }
}

TEST(Mesh, InvalidMeshesRejected) {
  std::vector<Point> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_THROW(PolygonalMesh(v, {{0, 3, 2, 1}}), GeometryError);  // clockwise
  EXPECT_THROW(PolygonalMesh(v, {{0, 2, 1, 3}}), GeometryError);  // bow tie
  EXPECT_THROW(PolygonalMesh(v, {{0, 1, 4}}), TopologyError);     // index out of range
  EXPECT_THROW(PolygonalMesh(v, {{0, 1, 2}}), TopologyError);     // unused vertex
  EXPECT_THROW(PolygonalMesh(v, {{0, 1}}), Error);                 // < 3 vertices
}

TEST(Mesh, Locate) {
  const auto m = generate_triangular_mesh(3);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Point x(detail::uniform(rng, -1, 1), detail::uniform(rng, -1, 1));
    const int c = m.locate(x);
    ASSERT_GE(c, 0);
    // barycentric oracle
    const auto p = m.cell_points(c);
    const double l1 = cross2(p[1] - x, p[2] - x), l2 = cross2(p[2] - x, p[0] - x), l3 = cross2(p[0] - x, p[1] - x);
    EXPECT_GE(std::min({l1, l2, l3}), -1e-14);
  }
  EXPECT_LT(m.locate(Point(1.5, 0.0)), 0);
  EXPECT_GE(m.locate(Point(0.0, 0.0)), 0);
}

TEST(Geometry, ClosedForms) {
  const auto sq = make_cell_geometry({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_NEAR(sq.area, 1.0, 1e-15);
  EXPECT_NEAR((sq.centroid - Point(0.5, 0.5)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(sq.diameter, std::sqrt(2.0), 1e-15);
  const auto tri = make_cell_geometry({{0, 0}, {1, 0}, {0, 1}});
  EXPECT_NEAR(tri.area, 0.5, 1e-15);
  EXPECT_NEAR((tri.centroid - Point(1.0 / 3, 1.0 / 3)).norm(), 0.0, 1e-15);
  std::vector<Point> hex;
  for (int k = 0; k < 6; ++k) hex.emplace_back(std::cos(k * M_PI / 3), std::sin(k * M_PI / 3));
  EXPECT_NEAR(make_cell_geometry(hex).area, 3.0 * std::sqrt(3.0) / 2.0, 1e-14);
  EXPECT_THROW(make_cell_geometry({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), GeometryError);
  EXPECT_THROW(make_cell_geometry({{0, 0}, {1, 0}}), GeometryError);
}

TEST(Geometry, DiameterIsMaxPairwiseDistance) {
  const auto m = generate_voronoi_mesh(40, 2, 8);
  for (const auto& g : compute_geometry(m)) {
    double d = 0.0;
    for (const auto& a : g.vertices)
      for (const auto& b : g.vertices) d = std::max(d, (a - b).norm());
    EXPECT_EQ(g.diameter, d);
  }
}

TEST(Regularity, Reports) {
  const auto sq = generate_triangular_mesh(1);
  const auto unit = PolygonalMesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}});
  const auto r = check_regularity(unit, compute_geometry(unit));
  EXPECT_NEAR(r.min_ratio(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_TRUE(r.all_star_shaped());
  const auto needle = PolygonalMesh({{0, 0}, {1, 0}, {1, 0.01}, {0, 0.01}}, {{0, 1, 2, 3}});
  const auto rn = check_regularity(needle, compute_geometry(needle));
  EXPECT_NEAR(rn.min_ratio(), 0.01 / std::sqrt(1.0001), 1e-12);
  EXPECT_EQ(rn.count_below(kDefaultRegularityRho), 1u);
  const auto tm = generate_triangular_mesh(4);
  const auto rt = check_regularity(tm, compute_geometry(tm));
  for (double x : rt.min_edge_ratio) EXPECT_NEAR(x, rt.min_edge_ratio.front(), 1e-14);
  EXPECT_EQ(rt.max_vertices, 3u);
  (void)sq;
}

TEST(MeshIO, RoundTrip) {
  for (const auto& m : sample_meshes()) {
    std::stringstream ss;
    mesh_write(m, ss);
    const std::string first = ss.str();
    const auto back = mesh_read(ss);
    ASSERT_EQ(back.num_vertices(), m.num_vertices());
    ASSERT_EQ(back.num_cells(), m.num_cells());
    for (int v = 0; v < static_cast<int>(m.num_vertices()); ++v) EXPECT_EQ(back.vertex(v), m.vertex(v));
    std::stringstream again;
    mesh_write(back, again);
    EXPECT_EQ(again.str(), first);
  }
  std::stringstream s2;
  mesh_write(generate_triangular_mesh(2), s2);
  std::string line;
  int vertex_lines = 0, section = 0;
  while (std::getline(s2, line)) {
    if (line.rfind("vertices", 0) == 0) section = 1;
    else if (line.rfind("cells", 0) == 0) section = 2;
    else if (section == 1) ++vertex_lines;
  }
  EXPECT_EQ(vertex_lines, 9);
}

TEST(MeshIO, Errors) {
  auto read = [](const std::string& s) {
    std::istringstream is(s);
    return mesh_read(is);
  };
  EXPECT_THROW(read("polymesh 1\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 7\n"), TopologyError);
  try {
    read("polymesh 1\nvertices 3\n0 0\n1 zero\n0 1\ncells 1\n0 1 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  EXPECT_THROW(read("polymesh 2\n"), ParseError);
  EXPECT_THROW(read("polymesh 1\nvertices 3\n0 0\n"), ParseError);
  EXPECT_NO_THROW(read("polymesh 1\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\n"));
}
