#pragma once

// Dense reference for one theta step: solves the coupled (B^{n+1}, E_hat) block
// system without eliminating B,
//   M_E B / dt + M_E R0 e                  = M_E F
//   theta (N0 - R0^T M_E) B + M_V00 e      = g
// with F = B^n / dt - R e0 and g = (1 - theta) A0 B^n - (M_V e0)|int.

#include <Eigen/Dense>

#include "polyvem/timestepper.hpp"

namespace polyvem::testing {

struct MonolithicStep {
  Eigen::VectorXd B, Ehat;
};

inline MonolithicStep monolithic_step(const Simulation& sim, const Eigen::VectorXd& bn, int n, double theta,
                                      double dt) {
  const auto& ops = sim.operators();
  const Eigen::MatrixXd P(sim.dofs().prolongation_matrix());
  const Eigen::MatrixXd ME(ops.mass_e), MV(ops.mass_v), R(ops.rot), N(ops.coupling);
  const Eigen::MatrixXd R0 = R * P, MV00 = P.transpose() * MV * P, N0 = P.transpose() * N;
  const Eigen::MatrixXd A0 = P.transpose() * (R.transpose() * ME - N);
  const Eigen::Index ne = ME.rows(), ni = MV00.rows();
  const double ts = (n + theta) * dt;
  Eigen::VectorXd e0(static_cast<Eigen::Index>(sim.mesh().num_vertices()));
  for (Eigen::Index v = 0; v < e0.size(); ++v) e0(v) = sim.problem().E0(sim.mesh().vertex(static_cast<int>(v)), ts);
  const Eigen::VectorXd F = bn / dt - R * e0;
  const Eigen::VectorXd g = (1 - theta) * A0 * bn - P.transpose() * MV * e0;
  Eigen::MatrixXd K(ne + ni, ne + ni);
  K << ME / dt, ME * R0, theta * (N0 - R0.transpose() * ME), MV00;
  Eigen::VectorXd rhs(ne + ni);
  rhs << ME * F, g;
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  return {x.head(ne), x.tail(ni)};
}

}  // namespace polyvem::testing
