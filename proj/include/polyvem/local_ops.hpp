#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

#include "polyvem/cell_geometry.hpp"
#include "polyvem/projectors.hpp"

namespace polyvem {

using ScalarField = std::function<double(const Point&)>;

/// Stabilized local nodal mass matrix
///   M_V = int_P sigma (Pi phi_i)(Pi phi_j) + tau sigma_avg |P| (I - P)^T (I - P),
/// with P the DOF-space matrix of the projector. The consistency term uses the
/// degree-4 rule on the fan the reconstruction is linear on.
inline Eigen::MatrixXd nodal_mass_matrix(const CellGeometry& g, const NodalProjector& proj, const ScalarField& sigma,
                                         double tau = 1.0) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  double sigma_int = 0.0;
  const std::size_t nv = g.num_vertices();
  for (std::size_t i = 0; i < nv; ++i) {
    const Point& a = proj.vertices()[i];
    const Point& b = proj.vertices()[(i + 1) % nv];
    for (const auto& q : triangle_rule_deg4(proj.fan_center(), a, b)) {
      const double s = sigma(q.x);
      if (!(s > 0.0)) throw CoefficientError("sigma <= 0 sampled inside the cell");
      const Eigen::VectorXd phi = proj.basis_values(q.x);
      m.noalias() += (q.w * s) * phi * phi.transpose();
      sigma_int += q.w * s;
    }
  }
  for (const auto& v : g.vertices)
    if (!(sigma(v) > 0.0)) throw CoefficientError("sigma <= 0 sampled at a cell vertex");
  const double sigma_avg = sigma_int / g.area;
  if (proj.variant() != ProjectorVariant::GalerkinInterp && tau != 0.0) {
    const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n) - proj.dof_matrix();
    m.noalias() += (tau * sigma_avg * g.area) * r.transpose() * r;
  }
  return m;
}

/// Projections of the edge space onto constant fields and onto RT0, plus the
/// divergence row. Edge DOFs are normal components in the global edge
/// orientation; EdgeGeometry::sign converts them to outward fluxes.
struct EdgeProjectorSet {
  Eigen::MatrixXd pi_e;         // 2 x N_E: constant field
  Eigen::MatrixXd pi_rt;        // 3 x N_E: (a1, a2, s) of w(x) = a + s x
  Eigen::RowVectorXd div_row;   // 1 x N_E
  Eigen::MatrixXd normals;      // N_E x 2: global unit normals, row j
};

inline EdgeProjectorSet edge_projectors(const CellGeometry& g) {
  const auto n = static_cast<Eigen::Index>(g.edges.size());
  EdgeProjectorSet s;
  s.pi_e.resize(2, n);
  s.pi_rt.resize(3, n);
  s.div_row.resize(n);
  s.normals.resize(n, 2);
  const Point& xp = g.centroid;
  // int_P |x - x_P|^2 / 2 and the RT0 Gram entry for the x - x_P direction.
  const double q_cell = g.integrate([&](const Point& x) { return 0.5 * (x - xp).squaredNorm(); });
  const double gram_s = 2.0 * q_cell;
  if (!(gram_s > 0.0) || !(g.area > 0.0)) throw GeometryError("edge projectors: singular RT0 Gram matrix");
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& e = g.edges[static_cast<std::size_t>(j)];
    const double sign = e.sign;
    const Point nglob = sign * e.normal;
    s.normals(j, 0) = nglob.x();
    s.normals(j, 1) = nglob.y();
    // Outward flux per unit DOF through the edge.
    const double flux = sign * e.length;
    s.div_row(j) = flux / g.area;
    const Point m = e.midpoint - xp;
    s.pi_e(0, j) = flux * m.x() / g.area;
    s.pi_e(1, j) = flux * m.y() / g.area;
    // Simpson's rule is exact for the quadratic |x - x_P|^2 / 2 along the edge.
    const double qa = 0.5 * (e.start - xp).squaredNorm();
    const double qm = 0.5 * m.squaredNorm();
    const double qb = 0.5 * (e.end - xp).squaredNorm();
    const double edge_q = (qa + 4.0 * qm + qb) / 6.0;  // average over the edge
    const double rhs_s = flux * edge_q - s.div_row(j) * q_cell;
    const double slope = rhs_s / gram_s;
    s.pi_rt(2, j) = slope;
    s.pi_rt(0, j) = s.pi_e(0, j) - slope * xp.x();
    s.pi_rt(1, j) = s.pi_e(1, j) - slope * xp.y();
  }
  return s;
}

/// Stabilized local edge mass matrix
///   M_E = |P| Pi_E^T Pi_E + tau |P| (I - D)^T (I - D),
/// with D mapping edge DOFs to the edge DOFs of the projected constant field.
inline Eigen::MatrixXd edge_mass_matrix(const CellGeometry& g, const EdgeProjectorSet& s, double tau = 1.0) {
  const auto n = static_cast<Eigen::Index>(g.edges.size());
  const Eigen::MatrixXd d = s.normals * s.pi_e;
  const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n) - d;
  return g.area * (s.pi_e.transpose() * s.pi_e) + (tau * g.area) * (r.transpose() * r);
}

/// Local rot map: (R v)_E = (v(V'') - v(V')) / |E| with V' -> V'' the global
/// edge orientation; the edge average of n . rot v.
inline Eigen::MatrixXd local_rot_map(const CellGeometry& g) {
  const auto n = static_cast<Eigen::Index>(g.edges.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = g.edges[static_cast<std::size_t>(i)];
    const double v = e.sign / e.length;
    r(i, (i + 1) % n) += v;
    r(i, i) -= v;
  }
  return r;
}

/// RT0 field a + s x evaluated at x from its (a1, a2, s) coefficients.
inline Point rt0_value(const Eigen::Vector3d& coef, const Point& x) {
  return Point(coef(0) + coef(2) * x.x(), coef(1) + coef(2) * x.y());
}

/// Cell data bundle used by the global assembly.
struct LocalMatrices {
  Eigen::MatrixXd mass_v;
  Eigen::MatrixXd mass_e;
  Eigen::MatrixXd rot;
  EdgeProjectorSet edge;
};

/// Integral of f over the cell: degree-4 rule on each centroid-fan triangle.
template <class F>
double polygon_quadrature(const CellGeometry& g, F&& f) {
  return g.integrate(std::forward<F>(f));
}

}  // namespace polyvem
