#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "polyvem/assembly.hpp"
#include "polyvem/cell_geometry.hpp"
#include "polyvem/errors.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/problems.hpp"

namespace polyvem {

enum class DtRule { Fixed, HSquared };

struct SchemeConfig {
  double theta = 0.5;
  DtRule dt_rule = DtRule::Fixed;
  double dt = 0.01;       // used with DtRule::Fixed
  double dt_coeff = 0.05;  // dt = dt_coeff * h^2 with DtRule::HSquared
  double T = 1.0;
};

/// Throws InvalidParameter on unusable settings; returns advisory warnings.
inline std::vector<std::string> validate(const SchemeConfig& c) {
  if (!(c.theta >= 0.0 && c.theta <= 1.0)) throw InvalidParameter("theta must lie in [0, 1]");
  if (!(c.T > 0.0)) throw InvalidParameter("final time T must be positive");
  if (c.dt_rule == DtRule::Fixed && !(c.dt > 0.0)) throw InvalidParameter("dt must be positive");
  if (c.dt_rule == DtRule::HSquared && !(c.dt_coeff > 0.0)) throw InvalidParameter("dt coefficient must be positive");
  std::vector<std::string> w;
  if (c.theta == 0.0)
    w.emplace_back("theta = 0 is the explicit limit; stability is not covered by the energy estimate");
  else if (c.theta < 0.5)
    w.emplace_back("theta < 1/2: the scheme is not unconditionally stable");
  return w;
}

inline double resolve_dt(const SchemeConfig& c, double h) {
  return c.dt_rule == DtRule::HSquared ? c.dt_coeff * h * h : c.dt;
}

/// Number of steps N = ceil(T / dt), with a relative guard against T/dt
/// landing a rounding error above an integer.
inline int num_steps(double T, double dt) {
  const double r = T / dt;
  const double k = std::ceil(r - 1e-9 * std::max(1.0, r));
  return std::max(1, static_cast<int>(k));
}

/// Operators of the Schur-reduced step, factored once.
///   K = M_V00 + theta dt A0 R0,   A0 = R0^T M_E - N0 (interior rows),
/// with R0 the rot map restricted to interior vertex columns.
struct StepSystem {
  double theta = 0.5;
  double dt = 0.0;
  SparseMatrix K;
  SparseMatrix R0;    // |E_h| x |V_h0|
  SparseMatrix A0;    // |V_h0| x |E_h|
  SparseMatrix MV0;   // |V_h0| x |V_h| (interior rows of M_V)
  SparseMatrix MV00;  // |V_h0| x |V_h0|
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
};

inline void derive_step_system(StepSystem& s, const GlobalOperators& ops, const DofMap& dofs, double theta,
                               double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("dt must be positive");
  s.theta = theta;
  s.dt = dt;
  const SparseMatrix p = dofs.prolongation_matrix();
  const SparseMatrix pt = p.transpose();
  s.R0 = ops.rot * p;
  s.MV0 = pt * ops.mass_v;
  s.MV00 = s.MV0 * p;
  const SparseMatrix rtm = SparseMatrix(ops.rot.transpose()) * ops.mass_e;
  s.A0 = pt * (rtm - ops.coupling);
  s.K = s.MV00 + (theta * dt) * SparseMatrix(s.A0 * s.R0);
  s.K.makeCompressed();
  if (s.K.rows() == 0) return;  // no interior vertices: nothing to solve
  s.lu.analyzePattern(s.K);
  s.lu.factorize(s.K);
  if (s.lu.info() != Eigen::Success)
    throw SolverError("step matrix is singular: " + std::string(s.lu.lastErrorMessage()));
}

struct EMState {
  int n = 0;            // B holds B^n
  double t = 0.0;       // n dt
  Eigen::VectorXd B;    // edge DOFs
  Eigen::VectorXd Ehat;  // interior part of E at t^{n-1+theta} (empty before the first step)
  Eigen::VectorXd E;     // full nodal E at t^{n-1+theta}
  Eigen::VectorXd e0;    // I^Vh E0 at t^{n-1+theta}
};

/// One theta step: B^{n+1} and E^{n+theta} from B^n.
///   F  = B^n / dt - R e0
///   g  = (1-theta) A0 B^n - (M_V e0)|_interior
///   K e_hat = g + theta dt A0 F,   B^{n+1} = dt (F - R0 e_hat) = B^n - dt R E
inline EMState step(const EMState& state, const StepSystem& s, const ProblemDefinition& problem,
                    const PolygonalMesh& mesh, const GlobalOperators& ops, const DofMap& dofs) {
  const double dt = s.dt;
  const double t_stag = (state.n + s.theta) * dt;
  const Eigen::VectorXd e0 = lift_boundary(problem, t_stag, mesh).e0;
  const Eigen::VectorXd F = state.B / dt - ops.rot * e0;
  const Eigen::VectorXd g = (1.0 - s.theta) * (s.A0 * state.B) - s.MV0 * e0;
  const Eigen::VectorXd rhs = g + (s.theta * dt) * (s.A0 * F);
  Eigen::VectorXd ehat;
  if (s.K.rows() > 0) {
    ehat = s.lu.solve(rhs);
    if (s.lu.info() != Eigen::Success) throw SolverError("sparse LU solve failed");
    const double res = (s.K * ehat - rhs).norm();
    const double scale = std::max(rhs.norm(), 1e-300);
    if (!std::isfinite(res) || res > 1e-8 * scale + 1e-300)
      throw SolverError("step solve residual too large: " + std::to_string(res / scale));
  } else {
    ehat = Eigen::VectorXd(0);
  }
  EMState next;
  next.n = state.n + 1;
  next.t = next.n * dt;
  next.Ehat = ehat;
  next.E = dofs.prolong(ehat) + e0;
  // Same as dt (F - R0 e_hat), without the B / dt * dt round trip.
  next.B = state.B - dt * (ops.rot * next.E);
  next.e0 = e0;
  return next;
}

/// Per-step quantities for diagnostics; entry k describes step k -> k+1.
struct StepRecord {
  int n = 0;               // k + 1
  double t = 0.0;          // (k+1) dt
  double t_stag = 0.0;     // (k + theta) dt
  double B_norm_sq = 0.0;  // |||B^{k+1}|||_E^2
  double Ehat_norm_sq = 0.0;  // |||E_hat^{k+theta}|||_V^2 (interior part)
  double data_norm_sq = 0.0;  // |||I E0|||_V^2 + |||R I E0|||_E^2 at t^{k+theta}
  double div_norm = 0.0;      // ||D B^{k+1}||_0
  double rel_change = 0.0;    // |B^{k+1} - B^k| / |B^k| (Euclidean)
};

struct RunResult {
  double h = 0.0;
  double dt = 0.0;
  int steps = 0;
  double B0_norm_sq = 0.0;
  double B0_div_norm = 0.0;
  EMState initial;
  EMState final;
  std::vector<StepRecord> records;
  std::vector<std::string> warnings;
};

inline double energy_norm_sq(const SparseMatrix& m, const Eigen::VectorXd& v) { return v.dot(m * v); }

inline double divergence_norm(const GlobalOperators& ops, const Eigen::VectorXd& b) {
  const Eigen::VectorXd d = ops.div * b;
  double s = 0.0;
  for (std::size_t c = 0; c < ops.geometry.size(); ++c) s += ops.geometry[c].area * d(static_cast<Eigen::Index>(c)) * d(static_cast<Eigen::Index>(c));
  return std::sqrt(s);
}

/// Everything one simulation needs, assembled once.
class Simulation {
 public:
  Simulation(PolygonalMesh mesh, ProblemDefinition problem, const AssemblyOptions& opt = {})
      : mesh_(std::move(mesh)), problem_(std::move(problem)), dofs_(mesh_) {
    geometry_ = compute_geometry(mesh_);
    ops_ = assemble_global(mesh_, geometry_, problem_, opt);
    h_ = mesh_.mesh_size();
  }

  const PolygonalMesh& mesh() const { return mesh_; }
  const ProblemDefinition& problem() const { return problem_; }
  const DofMap& dofs() const { return dofs_; }
  const GlobalOperators& operators() const { return ops_; }
  const std::vector<CellGeometry>& geometry() const { return geometry_; }
  double h() const { return h_; }

  using StepCallback = std::function<void(const EMState&, const StepRecord&)>;

  RunResult run(const SchemeConfig& cfg, const StepCallback& cb = {}) const {
    RunResult r;
    r.warnings = validate(cfg);
    r.h = h_;
    r.dt = resolve_dt(cfg, h_);
    r.steps = num_steps(cfg.T, r.dt);
    StepSystem sys;
    derive_step_system(sys, ops_, dofs_, cfg.theta, r.dt);
    EMState s;
    s.B = initial_magnetic_dofs(problem_, mesh_);
    r.initial = s;
    r.B0_norm_sq = energy_norm_sq(ops_.mass_e, s.B);
    r.B0_div_norm = divergence_norm(ops_, s.B);
    r.records.reserve(static_cast<std::size_t>(r.steps));
    for (int k = 0; k < r.steps; ++k) {
      EMState next;
      try {
        next = step(s, sys, problem_, mesh_, ops_, dofs_);
      } catch (const SolverError& e) {
        throw SolverError("step " + std::to_string(k + 1) + ": " + e.what());
      }
      if (!next.B.allFinite() || !next.E.allFinite())
        throw SolverError("non-finite values after step " + std::to_string(next.n));
      StepRecord rec;
      rec.n = next.n;
      rec.t = next.t;
      rec.t_stag = (k + cfg.theta) * r.dt;
      rec.B_norm_sq = energy_norm_sq(ops_.mass_e, next.B);
      rec.Ehat_norm_sq = next.Ehat.size() ? next.Ehat.dot(sys.MV00 * next.Ehat) : 0.0;
      const Eigen::VectorXd re0 = ops_.rot * next.e0;
      rec.data_norm_sq = energy_norm_sq(ops_.mass_v, next.e0) + energy_norm_sq(ops_.mass_e, re0);
      rec.div_norm = divergence_norm(ops_, next.B);
      const double bn = s.B.norm();
      rec.rel_change = bn > 0.0 ? (next.B - s.B).norm() / bn : (next.B - s.B).norm();
      if (cb) cb(next, rec);
      r.records.push_back(rec);
      s = std::move(next);
    }
    r.final = std::move(s);
    return r;
  }

 private:
  PolygonalMesh mesh_;
  ProblemDefinition problem_;
  DofMap dofs_;
  std::vector<CellGeometry> geometry_;
  GlobalOperators ops_;
  double h_ = 0.0;
};

}  // namespace polyvem
