#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <string>
#include <vector>

#include "polyvem/cell_geometry.hpp"
#include "polyvem/local_ops.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/problems.hpp"
#include "polyvem/projectors.hpp"
#include "polyvem/quadrature.hpp"

namespace polyvem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Global numbering of the nodal (V_h), interior nodal (V_h0), edge (E_h) and
/// cell (P_h) degrees of freedom. Mesh indices are used directly; interior
/// vertices are renumbered in increasing mesh order.
class DofMap {
 public:
  DofMap() = default;
  explicit DofMap(const PolygonalMesh& mesh)
      : n_vertices_(mesh.num_vertices()), n_edges_(mesh.num_edges()), n_cells_(mesh.num_cells()) {
    interior_of_vertex_.assign(n_vertices_, -1);
    for (int v = 0; v < static_cast<int>(n_vertices_); ++v) {
      if (mesh.is_boundary_vertex(v)) continue;
      interior_of_vertex_[static_cast<std::size_t>(v)] = static_cast<int>(vertex_of_interior_.size());
      vertex_of_interior_.push_back(v);
    }
  }

  std::size_t num_vertex_dofs() const { return n_vertices_; }
  std::size_t num_interior_dofs() const { return vertex_of_interior_.size(); }
  std::size_t num_edge_dofs() const { return n_edges_; }
  std::size_t num_cell_dofs() const { return n_cells_; }
  std::size_t num_boundary_vertices() const { return n_vertices_ - vertex_of_interior_.size(); }

  /// Interior index of vertex v, or -1 on the boundary.
  int interior_index(int v) const { return interior_of_vertex_[static_cast<std::size_t>(v)]; }
  int vertex_of_interior(int k) const { return vertex_of_interior_[static_cast<std::size_t>(k)]; }
  bool is_boundary_vertex(int v) const { return interior_index(v) < 0; }

  Eigen::VectorXd restrict_to_interior(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(vertex_of_interior_.size()));
    for (std::size_t k = 0; k < vertex_of_interior_.size(); ++k)
      r(static_cast<Eigen::Index>(k)) = full(vertex_of_interior_[k]);
    return r;
  }

  /// Extends an interior vector by zero on the boundary.
  Eigen::VectorXd prolong(const Eigen::VectorXd& interior) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_vertices_));
    for (std::size_t k = 0; k < vertex_of_interior_.size(); ++k)
      f(vertex_of_interior_[k]) = interior(static_cast<Eigen::Index>(k));
    return f;
  }

  /// Selection matrix (|V_h| x |V_h0|); its transpose restricts.
  SparseMatrix prolongation_matrix() const {
    Triplets t;
    for (std::size_t k = 0; k < vertex_of_interior_.size(); ++k)
      t.emplace_back(vertex_of_interior_[k], static_cast<int>(k), 1.0);
    SparseMatrix p(static_cast<Eigen::Index>(n_vertices_), static_cast<Eigen::Index>(vertex_of_interior_.size()));
    p.setFromTriplets(t.begin(), t.end());
    return p;
  }

 private:
  std::size_t n_vertices_ = 0, n_edges_ = 0, n_cells_ = 0;
  std::vector<int> interior_of_vertex_;
  std::vector<int> vertex_of_interior_;
};

inline DofMap build_dof_map(const PolygonalMesh& mesh) { return DofMap(mesh); }

struct AssemblyOptions {
  ProjectorVariant variant = ProjectorVariant::Elliptic;
  double tau_nodal = 1.0;
  double tau_edge = 1.0;
};

/// Assembled global operators plus the per-cell data the post-processing needs.
struct GlobalOperators {
  SparseMatrix mass_v;  // |V_h| x |V_h|, sigma-weighted, stabilized
  SparseMatrix mass_e;  // |E_h| x |E_h|
  SparseMatrix rot;     // |E_h| x |V_h|
  SparseMatrix div;     // |P_h| x |E_h|
  SparseMatrix coupling;  // |V_h| x |E_h|: (I^Vh(u x Pi^RT w), v)_Vh
  std::vector<CellGeometry> geometry;
  std::vector<NodalProjector> projectors;
  std::vector<EdgeProjectorSet> edge_sets;
  std::vector<Eigen::MatrixXd> local_mass_v;
  AssemblyOptions options;
};

namespace detail {

inline SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.prune(0.0);
  return m;
}

}  // namespace detail

/// Vertex x edge matrix of the velocity coupling. Per cell: Pi^RT of the edge
/// DOFs gives an RT0 field w, the scalar u x w = u_x w_y - u_y w_x is sampled
/// at the cell vertices (the local nodal interpolant) and tested with the
/// local nodal mass matrix.
inline SparseMatrix build_coupling_matrix(const PolygonalMesh& mesh, const GlobalOperators& ops,
                                          const VectorField& velocity) {
  Triplets t;
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const auto& g = ops.geometry[static_cast<std::size_t>(c)];
    const auto& rt = ops.edge_sets[static_cast<std::size_t>(c)].pi_rt;
    const auto nv = static_cast<Eigen::Index>(g.num_vertices());
    Eigen::MatrixXd l(nv, rt.cols());
    for (Eigen::Index i = 0; i < nv; ++i) {
      const Point& x = g.vertices[static_cast<std::size_t>(i)];
      const Point u = velocity(x);
      const Eigen::RowVectorXd wx = rt.row(0) + x.x() * rt.row(2);
      const Eigen::RowVectorXd wy = rt.row(1) + x.y() * rt.row(2);
      l.row(i) = u.x() * wy - u.y() * wx;
    }
    const Eigen::MatrixXd local = ops.local_mass_v[static_cast<std::size_t>(c)] * l;
    const auto& cv = mesh.cell(c);
    const auto& ce = mesh.cell_edges(c);
    for (Eigen::Index i = 0; i < nv; ++i)
      for (Eigen::Index j = 0; j < local.cols(); ++j)
        if (local(i, j) != 0.0) t.emplace_back(cv[static_cast<std::size_t>(i)], ce[static_cast<std::size_t>(j)], local(i, j));
  }
  return detail::from_triplets(static_cast<Eigen::Index>(mesh.num_vertices()),
                               static_cast<Eigen::Index>(mesh.num_edges()), t);
}

/// Scatter-adds the local matrices into the global operators.
inline GlobalOperators assemble_global(const PolygonalMesh& mesh, const std::vector<CellGeometry>& geometry,
                                       const ProblemDefinition& problem, const AssemblyOptions& opt = {}) {
  GlobalOperators ops;
  ops.options = opt;
  ops.geometry = geometry;
  const auto nc = mesh.num_cells();
  ops.projectors.reserve(nc);
  ops.edge_sets.reserve(nc);
  ops.local_mass_v.reserve(nc);
  Triplets tv, te, td;
  std::vector<Eigen::Vector2d> rot_rows(mesh.num_edges(), Eigen::Vector2d::Zero());
  std::vector<char> rot_done(mesh.num_edges(), 0);
  for (int c = 0; c < static_cast<int>(nc); ++c) {
    const auto& g = geometry[static_cast<std::size_t>(c)];
    ops.projectors.push_back(make_projector(opt.variant, g));
    ops.edge_sets.push_back(edge_projectors(g));
    const auto& es = ops.edge_sets.back();
    ops.local_mass_v.push_back(nodal_mass_matrix(g, ops.projectors.back(), problem.sigma, opt.tau_nodal));
    const Eigen::MatrixXd& mv = ops.local_mass_v.back();
    const Eigen::MatrixXd me = edge_mass_matrix(g, es, opt.tau_edge);
    const Eigen::MatrixXd rl = local_rot_map(g);
    const auto& cv = mesh.cell(c);
    const auto& ce = mesh.cell_edges(c);
    const auto n = static_cast<Eigen::Index>(cv.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        tv.emplace_back(cv[static_cast<std::size_t>(i)], cv[static_cast<std::size_t>(j)], mv(i, j));
        te.emplace_back(ce[static_cast<std::size_t>(i)], ce[static_cast<std::size_t>(j)], me(i, j));
      }
      td.emplace_back(c, ce[static_cast<std::size_t>(i)], es.div_row(i));
      // Rot row of edge i in (low vertex, high vertex) order.
      const int e = ce[static_cast<std::size_t>(i)];
      const int a = cv[static_cast<std::size_t>(i)];
      const Eigen::Index ia = i, ib = (i + 1) % n;
      const Eigen::Vector2d row = a < cv[static_cast<std::size_t>(ib)] ? Eigen::Vector2d(rl(i, ia), rl(i, ib))
                                                                       : Eigen::Vector2d(rl(i, ib), rl(i, ia));
      auto& done = rot_done[static_cast<std::size_t>(e)];
      if (done) {
        const Eigen::Vector2d& prev = rot_rows[static_cast<std::size_t>(e)];
        if ((prev - row).norm() > 1e-12 * prev.norm())
          throw AssemblyError("rot map orientation mismatch on edge " + std::to_string(e));
      } else {
        rot_rows[static_cast<std::size_t>(e)] = row;
        done = 1;
      }
    }
  }
  Triplets tr;
  tr.reserve(2 * mesh.num_edges());
  for (int e = 0; e < static_cast<int>(mesh.num_edges()); ++e) {
    tr.emplace_back(e, mesh.edge(e).v[0], rot_rows[static_cast<std::size_t>(e)](0));
    tr.emplace_back(e, mesh.edge(e).v[1], rot_rows[static_cast<std::size_t>(e)](1));
  }
  const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
  const auto ne = static_cast<Eigen::Index>(mesh.num_edges());
  ops.mass_v = detail::from_triplets(nv, nv, tv);
  ops.mass_e = detail::from_triplets(ne, ne, te);
  ops.rot = detail::from_triplets(ne, nv, tr);
  ops.div = detail::from_triplets(static_cast<Eigen::Index>(nc), ne, td);
  if (problem.velocity)
    ops.coupling = build_coupling_matrix(mesh, ops, problem.velocity);
  else
    ops.coupling = SparseMatrix(nv, ne);
  return ops;
}

/// Coupling vector N(u) B.
inline Eigen::VectorXd build_coupling(const GlobalOperators& ops, const Eigen::VectorXd& b) { return ops.coupling * b; }

/// I^Vh: vertex sampling.
template <class F>
Eigen::VectorXd interpolate_nodal(F&& f, const PolygonalMesh& mesh) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (int i = 0; i < static_cast<int>(mesh.num_vertices()); ++i) v(i) = f(mesh.vertex(i));
  return v;
}

/// I^Eh: edge average of n . w (global orientation), 3-point Gauss per edge.
template <class F>
Eigen::VectorXd interpolate_edge(F&& w, const PolygonalMesh& mesh) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(mesh.num_edges()));
  for (int e = 0; e < static_cast<int>(mesh.num_edges()); ++e) {
    const Point n = mesh.edge_normal(e);
    const Point a = mesh.vertex(mesh.edge(e).v[0]);
    const Point b = mesh.vertex(mesh.edge(e).v[1]);
    double s = 0.0;
    for (const auto& q : segment_rule_gauss3(a, b)) s += q.w * n.dot(w(q.x));
    d(e) = s / (b - a).norm();
  }
  return d;
}

/// I^Eh of w = rot psi, exact: the edge average of n . rot psi equals the
/// difference of psi between the edge endpoints divided by |E|.
template <class F>
Eigen::VectorXd interpolate_edge_from_stream(F&& psi, const PolygonalMesh& mesh) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(mesh.num_edges()));
  for (int e = 0; e < static_cast<int>(mesh.num_edges()); ++e) {
    const Point a = mesh.vertex(mesh.edge(e).v[0]);
    const Point b = mesh.vertex(mesh.edge(e).v[1]);
    d(e) = (psi(b) - psi(a)) / (b - a).norm();
  }
  return d;
}

/// I^Ph: cell averages.
template <class F>
Eigen::VectorXd interpolate_cell(F&& q, const std::vector<CellGeometry>& geometry) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(geometry.size()));
  for (std::size_t c = 0; c < geometry.size(); ++c)
    d(static_cast<Eigen::Index>(c)) = geometry[c].integrate(q) / geometry[c].area;
  return d;
}

/// Initial magnetic DOFs: exact through the stream function when the problem
/// supplies one, otherwise edge quadrature of B0.
inline Eigen::VectorXd initial_magnetic_dofs(const ProblemDefinition& p, const PolygonalMesh& mesh) {
  if (p.stream) return interpolate_edge_from_stream([&](const Point& x) { return p.stream(x, 0.0); }, mesh);
  return interpolate_edge([&](const Point& x) { return p.B0(x); }, mesh);
}

/// Interpolated electric data at time t on all vertices.
struct BoundaryLift {
  Eigen::VectorXd e0;  // I^Vh E0(t) on V_h
  double t = 0.0;
};

inline BoundaryLift lift_boundary(const ProblemDefinition& p, double t, const PolygonalMesh& mesh) {
  BoundaryLift l;
  l.t = t;
  l.e0 = interpolate_nodal([&](const Point& x) { return p.E0(x, t); }, mesh);
  return l;
}

/// Extracts rows (and optionally columns) of a sparse matrix on the interior vertices.
inline SparseMatrix restrict_rows(const SparseMatrix& m, const DofMap& dofs) {
  return SparseMatrix(dofs.prolongation_matrix().transpose() * m);
}

}  // namespace polyvem
