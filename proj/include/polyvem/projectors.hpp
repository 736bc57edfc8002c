#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "polyvem/cell_geometry.hpp"

namespace polyvem {

/// How the linear reconstruction of a nodal virtual function is built.
enum class ProjectorVariant { Elliptic, LeastSquares, GalerkinInterp };

inline const char* short_name(ProjectorVariant v) {
  switch (v) {
    case ProjectorVariant::Elliptic: return "E";
    case ProjectorVariant::LeastSquares: return "LS";
    case ProjectorVariant::GalerkinInterp: return "GI";
  }
  return "?";
}

inline ProjectorVariant parse_projector_variant(const std::string& s) {
  if (s == "E" || s == "elliptic") return ProjectorVariant::Elliptic;
  if (s == "LS" || s == "least_squares") return ProjectorVariant::LeastSquares;
  if (s == "GI" || s == "galerkin_interp") return ProjectorVariant::GalerkinInterp;
  throw InvalidParameter("unknown projector variant '" + s + "' (expected E, LS or GI)");
}

/// Linear (or fan-piecewise-linear) reconstruction of a nodal virtual function
/// from its vertex values on one cell.
///
/// Elliptic and LeastSquares produce p(x,y) = a + s (x - x_P)/h_P + c (y - y_P)/h_P;
/// coefficients() maps the N_V vertex values to (a, s, c). GalerkinInterp is the
/// continuous piecewise-linear interpolant on the fan around the internal node
/// x* = sum_V w_V x_V, with internal value v* = sum_V w_V v(x_V);
/// coefficients() then maps vertex values to the N_V + 1 fan-node values.
class NodalProjector {
 public:
  ProjectorVariant variant() const { return variant_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  const Eigen::MatrixXd& coefficients() const { return coef_; }
  const Point& center() const { return center_; }
  double scale() const { return scale_; }
  /// Internal fan node (GalerkinInterp) or centroid.
  const Point& fan_center() const { return fan_center_; }
  const std::vector<Point>& vertices() const { return vertices_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Values of the reconstructed basis functions at x: entry j is (Pi phi_j)(x).
  Eigen::VectorXd basis_values(const Point& x) const {
    const std::size_t n = vertices_.size();
    if (variant_ != ProjectorVariant::GalerkinInterp) {
      const Eigen::Vector3d m(1.0, (x.x() - center_.x()) / scale_, (x.y() - center_.y()) / scale_);
      return coef_.transpose() * m;
    }
    // Fan triangle (x*, V_i, V_i+1) with the largest minimum barycentric weight.
    std::size_t best = 0;
    Eigen::Vector3d best_l = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d l = barycentric(fan_center_, vertices_[i], vertices_[(i + 1) % n], x);
      if (l.minCoeff() > best_l.minCoeff()) {
        best_l = l;
        best = i;
      }
      if (l.minCoeff() >= 0.0) break;
    }
    Eigen::VectorXd phi = best_l(0) * weights_;
    phi(static_cast<Eigen::Index>(best)) += best_l(1);
    phi(static_cast<Eigen::Index>((best + 1) % n)) += best_l(2);
    return phi;
  }

  double evaluate(const Point& x, const Eigen::VectorXd& dofs) const { return basis_values(x).dot(dofs); }

  /// DOF-space matrix of the operator: column j holds the vertex values of Pi phi_j.
  Eigen::MatrixXd dof_matrix() const {
    const auto n = static_cast<Eigen::Index>(vertices_.size());
    if (variant_ == ProjectorVariant::GalerkinInterp) return Eigen::MatrixXd::Identity(n, n);
    return vandermonde() * coef_;
  }

  /// N_V x 3 matrix of the scaled monomials (1, (x-x_P)/h_P, (y-y_P)/h_P) at the vertices.
  Eigen::MatrixXd vandermonde() const {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(vertices_.size()), 3);
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      a(r, 0) = 1.0;
      a(r, 1) = (vertices_[i].x() - center_.x()) / scale_;
      a(r, 2) = (vertices_[i].y() - center_.y()) / scale_;
    }
    return a;
  }

  /// Integrates f over the cell on the fan the reconstruction is linear on.
  template <class F>
  double integrate(F&& f) const {
    return fan_quadrature(std::span<const Point>(vertices_), fan_center_, std::forward<F>(f));
  }

  static Eigen::Vector3d barycentric(const Point& a, const Point& b, const Point& c, const Point& x) {
    const double det = cross2(b - a, c - a);
    const double lb = cross2(x - a, c - a) / det;
    const double lc = cross2(b - a, x - a) / det;
    return {1.0 - lb - lc, lb, lc};
  }

 private:
  friend NodalProjector elliptic_projector(const CellGeometry&);
  friend NodalProjector least_squares_projector(const CellGeometry&);
  friend NodalProjector galerkin_interp_projector(const CellGeometry&, const Eigen::VectorXd&);

  ProjectorVariant variant_ = ProjectorVariant::Elliptic;
  std::vector<Point> vertices_;
  Point center_ = Point::Zero();
  Point fan_center_ = Point::Zero();
  double scale_ = 1.0;
  Eigen::MatrixXd coef_;
  Eigen::VectorXd weights_;
};

/// H^1-orthogonal projection onto linears with the vertex-average constraint.
/// The gradient is (1/|P|) * boundary integral of v n, exact by the trapezoid
/// rule because v is linear along each edge.
inline NodalProjector elliptic_projector(const CellGeometry& g) {
  if (!(g.area > 0.0)) throw GeometryError("elliptic projector: degenerate cell");
  NodalProjector p;
  p.variant_ = ProjectorVariant::Elliptic;
  p.vertices_ = g.vertices;
  p.center_ = p.fan_center_ = g.centroid;
  p.scale_ = g.diameter;
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  p.coef_ = Eigen::MatrixXd::Zero(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = g.edges[static_cast<std::size_t>(i)];
    const Point flux = 0.5 * e.length * e.normal / g.area;
    const Eigen::Index j = (i + 1) % n;
    p.coef_(1, i) += flux.x() * g.diameter;
    p.coef_(2, i) += flux.y() * g.diameter;
    p.coef_(1, j) += flux.x() * g.diameter;
    p.coef_(2, j) += flux.y() * g.diameter;
  }
  const Eigen::MatrixXd a = p.vandermonde();
  const double m1 = a.col(1).mean();
  const double m2 = a.col(2).mean();
  for (Eigen::Index j = 0; j < n; ++j)
    p.coef_(0, j) = 1.0 / static_cast<double>(n) - p.coef_(1, j) * m1 - p.coef_(2, j) * m2;
  return p;
}

/// Least-squares linear fit of the vertex values via the normal equations.
inline NodalProjector least_squares_projector(const CellGeometry& g) {
  if (g.num_vertices() < 3) throw SingularCell("least-squares projector: fewer than 3 vertices");
  NodalProjector p;
  p.variant_ = ProjectorVariant::LeastSquares;
  p.vertices_ = g.vertices;
  p.center_ = p.fan_center_ = g.centroid;
  p.scale_ = g.diameter;
  const Eigen::MatrixXd a = p.vandermonde();
  const Eigen::Matrix3d ata = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(ata);
  if (!(eig.eigenvalues()(0) > 1e-12 * eig.eigenvalues()(2)))
    throw SingularCell("least-squares projector: collinear vertices (rank-deficient normal matrix)");
  p.coef_ = ata.ldlt().solve(a.transpose());
  return p;
}

/// Fan-piecewise-linear interpolant. Empty weights select w_V = 1/N_V.
inline NodalProjector galerkin_interp_projector(const CellGeometry& g, const Eigen::VectorXd& weights = {}) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::VectorXd w = weights.size() == 0 ? Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)) : weights;
  if (w.size() != n) throw InvalidParameter("galerkin interpolant: weight count does not match vertex count");
  if (w.minCoeff() <= 0.0 || std::abs(w.sum() - 1.0) > 1e-12)
    throw InvalidParameter("galerkin interpolant: weights must be positive and sum to 1");
  NodalProjector p;
  p.variant_ = ProjectorVariant::GalerkinInterp;
  p.vertices_ = g.vertices;
  p.center_ = g.centroid;
  p.scale_ = g.diameter;
  p.weights_ = w;
  Point star = Point::Zero();
  for (Eigen::Index i = 0; i < n; ++i) star += w(i) * g.vertices[static_cast<std::size_t>(i)];
  p.fan_center_ = star;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point& a = g.vertices[static_cast<std::size_t>(i)];
    const Point& b = g.vertices[static_cast<std::size_t>((i + 1) % n)];
    if (!(cross2(a - star, b - star) > 0.0))
      throw StarShapeViolation("galerkin interpolant: fan triangle " + std::to_string(i) +
                               " has non-positive area (cell not star-shaped w.r.t. x*)");
  }
  p.coef_.resize(n + 1, n);
  p.coef_.topRows(n).setIdentity();
  p.coef_.row(n) = w.transpose();
  return p;
}

inline NodalProjector make_projector(ProjectorVariant v, const CellGeometry& g) {
  switch (v) {
    case ProjectorVariant::Elliptic: return elliptic_projector(g);
    case ProjectorVariant::LeastSquares: return least_squares_projector(g);
    case ProjectorVariant::GalerkinInterp: return galerkin_interp_projector(g);
  }
  throw InvalidParameter("unknown projector variant");
}

}  // namespace polyvem
