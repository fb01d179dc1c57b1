#ifndef NHMECH_DYNAMICS_HPP
#define NHMECH_DYNAMICS_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "nhmech/constraints.hpp"
#include "nhmech/frame.hpp"

namespace nhmech {

/// Lagrangian L(eta_full, x, t) over a group frame, with optional
/// nonholonomic constraints (absent means holonomic, m = n).
struct LagrangianModel {
  using LFn = std::function<double(const Eigen::VectorXd&,
                                   const Eigen::VectorXd&, double)>;
  using DLFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                             const Eigen::VectorXd&, double)>;

  LFn L;
  DLFn dL_deta;  // optional; finite differences otherwise
  GroupFrame frame;
  std::optional<ConstraintSet> constraints;
  bool conservative = false;  // enables energy checks only

  double fd_step = 1e-6;
  double tol_newton = 1e-12;
  int newton_max_iter = 50;
  double rcond_min = 1e-10;

  /// Ablation switch: drops the (A_j^alpha)* force term from both
  /// equation-of-motion routes. For sensitivity studies only.
  bool break_astar = false;

  int n() const { return frame.n(); }
  int m() const { return constraints ? constraints->m : frame.n(); }

  /// Full eta from the independent block (identity when unconstrained).
  Eigen::VectorXd complete(const Eigen::VectorXd& eta_i,
                           const Eigen::VectorXd& x, double t) const;

  /// dL/deta_p, analytic or central differences.
  Eigen::VectorXd dL(const Eigen::VectorXd& eta_full, const Eigen::VectorXd& x,
                     double t) const;
};

/// Point of the extended reduced phase space (t, x, y*).
struct PhaseState {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd ystar;
};

/// Lagrange-side state (t, x, eta_i).
struct LagrangeState {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd eta_i;
};

/// L*(eta_i, x, t) = L with the dependent eta substituted.
double reduced_lagrangian(const LagrangianModel& model,
                          const Eigen::VectorXd& eta_i,
                          const Eigen::VectorXd& x, double t);

/// y*_j = dL*/deta_j via the chain rule through phi.
Eigen::VectorXd reduced_momenta(const LagrangianModel& model,
                                const Eigen::VectorXd& eta_i,
                                const Eigen::VectorXd& x, double t);

/// M_jk = d y*_j / d eta_k (the reduced Hessian).
Eigen::MatrixXd reduced_hessian(const LagrangianModel& model,
                                const Eigen::VectorXd& eta_i,
                                const Eigen::VectorXd& x, double t);

/// Newton inversion of the reduced Legendre transform; returns eta_i with
/// |reduced_momenta(eta_i) - ystar| below tol_newton.
Eigen::VectorXd legendre_invert(const LagrangianModel& model,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& ystar, double t,
                                const Eigen::VectorXd& guess = {});

/// H* = eta_j y*_j - L*.
double hamiltonian_reduced(const LagrangianModel& model,
                           const Eigen::VectorXd& x,
                           const Eigen::VectorXd& ystar, double t,
                           const Eigen::VectorXd& guess = {});

struct LagrangeRhs {
  Eigen::VectorXd xdot;
  Eigen::VectorXd eta_dot;  // of the independent parameters
};

/// Multiplier-free equations of motion. Every eta_dot occurrence
/// (including the curvature part of (A_j^alpha)*) is moved into one m x m
/// linear system and solved in a single step.
LagrangeRhs eom_rhs_lagrange(const LagrangianModel& model,
                             const LagrangeState& s);

struct HamiltonRhs {
  Eigen::VectorXd xdot;
  Eigen::VectorXd ystar_dot;
  Eigen::VectorXd eta_i;    // Legendre-inverted; reusable as a warm start
  Eigen::VectorXd eta_dot;  // from the embedded Lagrange-side solve
};

/// Canonical form of the same flow. The embedded eta_dot needed by
/// (A_j^alpha)* comes from the Lagrange-side solve at the mapped state,
/// which also fixes the sign of the A*-term so the two routes agree.
HamiltonRhs eom_rhs_hamilton(const LagrangianModel& model, const PhaseState& s,
                             const Eigen::VectorXd& guess = {});

/// Contraction of the unreduced dynamics bracket with an admissible
/// virtual displacement; vanishes on solutions. Assembled directly from
/// L and the structure coefficients, independent of the reduced route.
double dalembert_residual(const LagrangianModel& model, const LagrangeState& s,
                          const Eigen::VectorXd& eta_dot,
                          const Eigen::VectorXd& omega_i);

/// X*_j L* for j = 1..m, used by both equation-of-motion routes.
Eigen::VectorXd xstar_reduced_lagrangian(const LagrangianModel& model,
                                         const Eigen::VectorXd& eta_i,
                                         const Eigen::VectorXd& x, double t);

}  // namespace nhmech

#endif
