#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "polyvem/assembly.hpp"
#include "polyvem/errors.hpp"
#include "polyvem/timestepper.hpp"

namespace polyvem {

/// Local vertex values of a global nodal vector on cell c.
inline Eigen::VectorXd cell_nodal_values(const PolygonalMesh& mesh, int c, const Eigen::VectorXd& v) {
  const auto& cv = mesh.cell(c);
  Eigen::VectorXd r(static_cast<Eigen::Index>(cv.size()));
  for (std::size_t i = 0; i < cv.size(); ++i) r(static_cast<Eigen::Index>(i)) = v(cv[i]);
  return r;
}

inline Eigen::VectorXd cell_edge_values(const PolygonalMesh& mesh, int c, const Eigen::VectorXd& b) {
  const auto& ce = mesh.cell_edges(c);
  Eigen::VectorXd r(static_cast<Eigen::Index>(ce.size()));
  for (std::size_t i = 0; i < ce.size(); ++i) r(static_cast<Eigen::Index>(i)) = b(ce[i]);
  return r;
}

/// RT0 reconstruction coefficients (a1, a2, s) of B on cell c.
inline Eigen::Vector3d reconstruct_B(const PolygonalMesh& mesh, const GlobalOperators& ops, int c,
                                     const Eigen::VectorXd& b) {
  return ops.edge_sets[static_cast<std::size_t>(c)].pi_rt * cell_edge_values(mesh, c, b);
}

struct L2Error {
  double abs = 0.0;
  double ref = 0.0;  // L2 norm of the exact field
  double rel() const { return ref > 0.0 ? abs / ref : abs; }
};

/// || Pi E_h - E || over the domain, using the configured reconstruction.
template <class F>
L2Error l2_error_nodal(const PolygonalMesh& mesh, const GlobalOperators& ops, const Eigen::VectorXd& e, F&& exact) {
  L2Error r;
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const auto& proj = ops.projectors[static_cast<std::size_t>(c)];
    const Eigen::VectorXd loc = cell_nodal_values(mesh, c, e);
    r.abs += proj.integrate([&](const Point& x) {
      const double d = proj.evaluate(x, loc) - exact(x);
      return d * d;
    });
    r.ref += proj.integrate([&](const Point& x) {
      const double v = exact(x);
      return v * v;
    });
  }
  r.abs = std::sqrt(r.abs);
  r.ref = std::sqrt(r.ref);
  return r;
}

/// || Pi^RT B_h - B || restricted to the components selected by mask.
template <class F>
L2Error l2_error_edge(const PolygonalMesh& mesh, const GlobalOperators& ops, const Eigen::VectorXd& b, F&& exact,
                      const Eigen::Vector2d& mask = Eigen::Vector2d(1.0, 1.0)) {
  L2Error r;
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const Eigen::Vector3d coef = reconstruct_B(mesh, ops, c, b);
    const auto& g = ops.geometry[static_cast<std::size_t>(c)];
    r.abs += g.integrate([&](const Point& x) {
      const Point d = (rt0_value(coef, x) - exact(x)).cwiseProduct(mask);
      return d.squaredNorm();
    });
    r.ref += g.integrate([&](const Point& x) { return Point(exact(x).cwiseProduct(mask)).squaredNorm(); });
  }
  r.abs = std::sqrt(r.abs);
  r.ref = std::sqrt(r.ref);
  return r;
}

inline L2Error l2_error_E(const Simulation& sim, const Eigen::VectorXd& e, double t) {
  const auto& p = sim.problem();
  if (!p.exact_E) throw UnsupportedProblem("no exact electric field for '" + p.name + "'");
  return l2_error_nodal(sim.mesh(), sim.operators(), e, [&](const Point& x) { return p.exact_E(x, t); });
}

inline L2Error l2_error_B(const Simulation& sim, const Eigen::VectorXd& b, double t) {
  const auto& p = sim.problem();
  if (!p.exact_B) throw UnsupportedProblem("no exact magnetic field for '" + p.name + "'");
  return l2_error_edge(sim.mesh(), sim.operators(), b, [&](const Point& x) { return p.exact_B(x, t); });
}

inline L2Error l2_error_Bx(const Simulation& sim, const Eigen::VectorXd& b, double t) {
  const auto& p = sim.problem();
  if (!p.exact_B) throw UnsupportedProblem("no exact magnetic field for '" + p.name + "'");
  return l2_error_edge(sim.mesh(), sim.operators(), b, [&](const Point& x) { return p.exact_B(x, t); },
                       Eigen::Vector2d(1.0, 0.0));
}

/// Reconstructed nodal field at an arbitrary point.
inline double probe_nodal(const Simulation& sim, const Eigen::VectorXd& e, const Point& x) {
  const int c = sim.mesh().locate(x);
  if (c < 0) throw DomainError("probe point outside the mesh");
  const auto& proj = sim.operators().projectors[static_cast<std::size_t>(c)];
  return proj.evaluate(x, cell_nodal_values(sim.mesh(), c, e));
}

inline Point probe_edge(const Simulation& sim, const Eigen::VectorXd& b, const Point& x) {
  const int c = sim.mesh().locate(x);
  if (c < 0) throw DomainError("probe point outside the mesh");
  return rt0_value(reconstruct_B(sim.mesh(), sim.operators(), c, b), x);
}

/// Experimental orders of convergence.
struct EocTable {
  std::vector<double> h;
  std::vector<double> err;
  std::vector<double> pairwise;  // pairwise[i] between levels i and i+1
  double slope = std::numeric_limits<double>::quiet_NaN();  // least-squares fit of log err vs log h
};

inline EocTable eoc_table(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size()) throw InvalidParameter("eoc: size mismatch");
  if (h.size() < 2) throw InvalidParameter("eoc: need at least two records");
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (h[i] == h[j]) throw InvalidParameter("eoc: repeated mesh size");
  EocTable t;
  t.h = h;
  t.err = err;
  for (std::size_t i = 0; i + 1 < h.size(); ++i)
    t.pairwise.push_back(std::log(err[i] / err[i + 1]) / std::log(h[i] / h[i + 1]));
  const auto n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  t.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return t;
}

/// Weighted energy balance of the theta scheme for a given Q. With
/// beta = (1 - Q theta) / (1 + Q (1 - theta)) and gamma = 1 / (1 - Q theta):
///   E_R(n) = (|||B^0|||^2 + gamma dt sum_{k<=n} beta^{k+1} X_k) / |||B^0|||^2
///   E_L(n) = (beta^{n+1} |||B^{n+1}|||^2 + gamma dt / 2 sum_{k<=n} beta^{k+1} |||E^{k+theta}|||^2) / |||B^0|||^2
/// where X_k = |||I E0|||_V^2 + |||R I E0|||_E^2 at t^{k+theta}.
struct EnergyLedger {
  double Q = 0.0;
  double theta = 0.5;
  double beta = 0.0;
  double gamma = 0.0;
  bool hypothesis_ok = true;  // Q theta < 1
  std::vector<double> E_L, E_R;
  std::vector<char> step_ok;  // E_L(n) <= E_R(n)
  double min_slack = std::numeric_limits<double>::infinity();  // min_n (E_R - E_L)
  bool satisfied() const { return hypothesis_ok && min_slack >= 0.0; }
  double final_gap() const { return E_R.empty() ? 0.0 : E_R.back() - E_L.back(); }
};

inline EnergyLedger energy_ledger(const RunResult& run, double Q, double theta) {
  EnergyLedger l;
  l.Q = Q;
  l.theta = theta;
  if (!(Q > 0.0)) throw InvalidParameter("energy ledger: Q must be positive");
  if (Q * theta >= 1.0) {
    l.hypothesis_ok = false;
    return l;
  }
  l.beta = (1.0 - Q * theta) / (1.0 + Q * (1.0 - theta));
  l.gamma = 1.0 / (1.0 - Q * theta);
  const double b0 = run.B0_norm_sq;
  if (!(b0 > 0.0)) throw InvalidParameter("energy ledger: zero initial field");
  double sum_r = 0.0, sum_l = 0.0, bp = 1.0;
  for (const auto& rec : run.records) {
    bp *= l.beta;
    sum_r += bp * rec.data_norm_sq;
    sum_l += bp * rec.Ehat_norm_sq;
    const double er = (b0 + l.gamma * run.dt * sum_r) / b0;
    const double el = (bp * rec.B_norm_sq + 0.5 * l.gamma * run.dt * sum_l) / b0;
    l.E_R.push_back(er);
    l.E_L.push_back(el);
    l.step_ok.push_back(el <= er);
    l.min_slack = std::min(l.min_slack, er - el);
  }
  return l;
}

/// Q = 2k / (m + 1), k = 1..m: m points strictly inside (0, 2).
inline std::vector<double> default_q_grid(int m = 50) {
  std::vector<double> q;
  for (int k = 1; k <= m; ++k) q.push_back(2.0 * k / (m + 1));
  return q;
}

}  // namespace polyvem
