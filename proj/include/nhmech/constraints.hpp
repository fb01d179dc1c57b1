#ifndef NHMECH_CONSTRAINTS_HPP
#define NHMECH_CONSTRAINTS_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "nhmech/frame.hpp"

namespace nhmech {

/// Nonholonomic constraints in solved form, eta_alpha = phi_alpha(eta_i, x, t),
/// with the dependent parameters always the trailing block alpha = m+1..n.
///
/// All partials beyond phi itself are optional; missing ones are replaced
/// by central finite differences (sqrt-scaled steps for second partials).
struct ConstraintSet {
  using PhiFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                              const Eigen::VectorXd&, double)>;
  using MatFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&,
                                              const Eigen::VectorXd&, double)>;
  using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                              const Eigen::VectorXd&, double)>;
  using TensorFn = std::function<std::vector<Eigen::MatrixXd>(
      const Eigen::VectorXd&, const Eigen::VectorXd&, double)>;

  int m = 0;  // independent parameters eta_i
  int n = 0;  // total parameter count; n - m constraints

  PhiFn phi;           // (n-m)-vector phi_alpha
  MatFn dphi_deta;     // (n-m) x m, rows alpha, cols j
  MatFn dphi_dx;       // (n-m) x n, optional
  VecFn dphi_dt;       // (n-m), optional
  TensorFn d2phi_eta_eta;  // per alpha: m x m Hessian in eta, optional
  TensorFn d2phi_x_eta;    // per alpha: n x m (d2 phi / dx_q deta_j), optional
  MatFn d2phi_t_eta;       // (n-m) x m, optional

  double fd_step = 1e-6;

  Eigen::VectorXd phi_at(const Eigen::VectorXd& eta_i, const Eigen::VectorXd& x,
                         double t) const;
  Eigen::MatrixXd dphi_deta_at(const Eigen::VectorXd& eta_i,
                               const Eigen::VectorXd& x, double t) const;
  Eigen::MatrixXd dphi_dx_at(const Eigen::VectorXd& eta_i,
                             const Eigen::VectorXd& x, double t) const;
  Eigen::VectorXd dphi_dt_at(const Eigen::VectorXd& eta_i,
                             const Eigen::VectorXd& x, double t) const;
  std::vector<Eigen::MatrixXd> d2_eta_eta(const Eigen::VectorXd& eta_i,
                                          const Eigen::VectorXd& x,
                                          double t) const;
  std::vector<Eigen::MatrixXd> d2_x_eta(const Eigen::VectorXd& eta_i,
                                        const Eigen::VectorXd& x,
                                        double t) const;
  Eigen::MatrixXd d2_t_eta(const Eigen::VectorXd& eta_i,
                           const Eigen::VectorXd& x, double t) const;
};

/// Full eta with the dependent block filled in from phi.
Eigen::VectorXd complete_eta(const ConstraintSet& cs,
                             const Eigen::VectorXd& eta_i,
                             const Eigen::VectorXd& x, double t);

/// max_alpha |eta_alpha - phi_alpha| for a full eta vector.
double admissibility_residual(const ConstraintSet& cs,
                              const Eigen::VectorXd& eta_full,
                              const Eigen::VectorXd& x, double t);

/// Full omega with the dependent components omega_alpha = dphi/deta_i omega_i.
/// The Chetaev contraction (df_alpha/deta_p) omega_p vanishes by construction.
Eigen::VectorXd admissible_omega(const ConstraintSet& cs,
                                 const Eigen::VectorXd& omega_i,
                                 const Eigen::VectorXd& eta_i,
                                 const Eigen::VectorXd& x, double t);

/// The K combinations of structure coefficients and the constraint
/// Jacobian, evaluated at one point.
///
/// k0k(j, k)    = K_{0j}^k      kqk[q](j, k) = K_{qj}^k
/// k0a(j, a)    = K_{0j}^alpha  kqa[q](j, a) = K_{qj}^alpha
/// with a = alpha - m - 1 the 0-based dependent index.
struct ReductionCoefficients {
  Eigen::MatrixXd k0k;
  std::vector<Eigen::MatrixXd> kqk;
  Eigen::MatrixXd k0a;
  std::vector<Eigen::MatrixXd> kqa;
};

ReductionCoefficients k_coefficients(const GroupFrame& frame,
                                     const ConstraintSet& cs,
                                     const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& eta_full, double t);

/// X*_j G = X_j G + (dphi_beta/deta_j) X_beta G, j = 0..m-1 (0-based).
double starred_apply(const GroupFrame& frame, const ConstraintSet& cs, int j,
                     const ScalarField& g, const Eigen::VectorXd& eta_i,
                     const Eigen::VectorXd& x, double t);

/// The second-viewpoint coefficients (A_j^alpha)*, split so callers can
/// assemble systems that are implicit in eta_dot:
///   value(a, j) = base(a, j) + sum_i curvature[a](i, j) eta_dot_i.
struct AStarResult {
  Eigen::MatrixXd value;
  Eigen::MatrixXd base;
  std::vector<Eigen::MatrixXd> curvature;  // per alpha: d2 phi / deta_i deta_j
};

AStarResult a_star(const GroupFrame& frame, const ConstraintSet& cs,
                   const Eigen::VectorXd& eta_i, const Eigen::VectorXd& x,
                   double t, const Eigen::VectorXd& eta_dot);

/// First-viewpoint coefficients A_i^alpha, assembled exactly as printed,
/// with the raw (not re-completed) full eta supplied by the caller.
/// Diagnostic only; coincides with a_star on admissible states.
Eigen::MatrixXd a_holder(const GroupFrame& frame, const ConstraintSet& cs,
                         const Eigen::VectorXd& eta_full,
                         const Eigen::VectorXd& x, double t,
                         const Eigen::VectorXd& eta_dot);

}  // namespace nhmech

#endif
