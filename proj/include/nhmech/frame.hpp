#ifndef NHMECH_FRAME_HPP
#define NHMECH_FRAME_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

namespace nhmech {

/// Structure coefficients of the operator family at one (x, t).
///
/// Storage convention: c0(p, q) = C_{0p}^q and c[r](p, q) = C_{pq}^r,
/// p, q, r = 1..n mapped to 0-based indices. The c[r] matrices are
/// antisymmetric.
struct StructureCoefficients {
  Eigen::MatrixXd c0;               // C_{0p}^q, row p, column q
  std::vector<Eigen::MatrixXd> c;   // c[r](p, q) = C_{pq}^r
};

/// Result of a structure-coefficient query, with the residual of the
/// linear solve against the commutator components (zero when the
/// coefficients were user-supplied).
struct StructureResult {
  StructureCoefficients coeffs;
  double solve_residual = 0.0;
  bool user_supplied = false;
};

/// Scalar field G(x, t) with optional analytic partials. Missing partials
/// fall back to central finite differences of `value`.
struct ScalarField {
  std::function<double(const Eigen::VectorXd&, double)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> gradient;
  std::function<double(const Eigen::VectorXd&, double)> time_partial;

  Eigen::VectorXd grad(const Eigen::VectorXd& x, double t) const;
  double dt(const Eigen::VectorXd& x, double t) const;
};

/// Transitive operator family X_0, X_p encoded by the (n+1)x(n+1)
/// coefficient matrix xi, row mu = operator, column nu = coordinate,
/// with slot 0 reserved for time: xi(0,0) = 1 and xi(p,0) = 0.
///
/// X_0 = d/dt + xi(0,q) d/dx_q,  X_p = xi(p,q) d/dx_q.
///
/// Immutable after construction; all member operations are pure and the
/// user-supplied closures must be reentrant.
class GroupFrame {
 public:
  using XiFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, double)>;
  /// Jacobian supplier: element q of the result is d(xi)/dx_q.
  using XiJacFn =
      std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&, double)>;
  using StructureFn =
      std::function<StructureCoefficients(const Eigen::VectorXd&, double)>;

  GroupFrame() = default;  // empty; usable only after assignment
  GroupFrame(int n, XiFn xi);
  GroupFrame(int n, XiFn xi, XiJacFn xi_jacobian);
  GroupFrame(int n, XiFn xi, XiJacFn xi_jacobian, StructureFn structure);

  int n() const { return n_; }
  bool has_structure() const { return static_cast<bool>(structure_); }

  /// Full (n+1)x(n+1) coefficient matrix; validates the fixed entries.
  Eigen::MatrixXd xi_at(const Eigen::VectorXd& x, double t) const;

  /// The n x n spatial block xi_p^q (p, q >= 1).
  Eigen::MatrixXd block(const Eigen::VectorXd& x, double t) const;

  /// Drift column xi_0^q.
  Eigen::VectorXd drift(const Eigen::VectorXd& x, double t) const;

  /// Inverse zeta of the full matrix; raises SingularFrame when the
  /// spatial block has rcond below the threshold.
  Eigen::MatrixXd zeta(const Eigen::VectorXd& x, double t) const;

  /// X_mu G at (x, t); mu = 0 adds the time partial.
  double apply_operator(int mu, const ScalarField& g, const Eigen::VectorXd& x,
                        double t) const;

  /// Structure coefficients at (x, t). Returns the user supplier's values
  /// when present; otherwise solves xi_r^s C_.^r = commutator_s for C.
  /// With validate = true a user-supplied result is cross-checked against
  /// the commutator solve and FrameInconsistency is raised past tol.
  StructureResult structure_coefficients(const Eigen::VectorXd& x, double t,
                                         bool validate = false,
                                         double tol = 1e-6) const;

  /// Always solves the commutator system, ignoring any user supplier.
  StructureResult structure_from_commutators(const Eigen::VectorXd& x,
                                             double t) const;

  /// eta solving xi_p^q eta_p = xdot_q - xi_0^q.
  Eigen::VectorXd eta_from_velocity(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& xdot,
                                    double t) const;

  /// xdot_q = xi_0^q + eta_p xi_p^q.
  Eigen::VectorXd velocity_from_eta(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& eta,
                                    double t) const;

  /// Asynchronous parameters from a coordinate-space tangent:
  /// Omega_mu = zeta_lambda^mu dx_lambda with dx_0 = dt_tangent.
  /// Returns a vector of length n+1, slot 0 = Omega_0 = dt_tangent.
  Eigen::VectorXd omega_from_dx(const Eigen::VectorXd& x, double t,
                                const Eigen::VectorXd& dx,
                                double dt_tangent) const;

  /// d(xi)/dx_q, analytic when supplied, otherwise central differences.
  std::vector<Eigen::MatrixXd> xi_jacobian(const Eigen::VectorXd& x,
                                           double t) const;

  /// d(xi)/dt by central differences.
  Eigen::MatrixXd xi_time_derivative(const Eigen::VectorXd& x, double t) const;

  double rcond_threshold = 1e-10;
  double fd_step = 1e-6;

private:
  int n_ = 0;
  XiFn xi_;
  XiJacFn xi_jac_;
  StructureFn structure_;
};

/// Omega_0 = Omega0, Omega_p = omega_p + eta_p * Omega0 (length n+1).
Eigen::VectorXd asynchronous_parameters(const Eigen::VectorXd& omega,
                                        const Eigen::VectorXd& eta,
                                        double Omega0);

/// Synchronous virtual-displacement parameters omega_p(t) and the
/// time-variation parameter Omega_0(t) of a varied family.
struct VariationProbe {
  std::function<Eigen::VectorXd(double)> omega;
  std::function<double(double)> Omega0;
};

/// Differentiable curve x(t) with its velocity, usable slightly outside
/// [t0, t1] (the asynchronous variation shifts evaluation times).
struct TrajectorySegment {
  std::function<Eigen::VectorXd(double)> x;
  std::function<Eigen::VectorXd(double)> xdot;
  double t0;
  double t1;
};

/// Residuals of the transpositional identities, each normalized by
/// epsilon so a correct implementation yields O(epsilon) values.
struct TranspositionReport {
  double dev_sync;        // delta-eta identity
  double dev_async;       // asynchronous Delta-eta identity
  double dev_functional;  // Delta of the integral functional
  double epsilon;
};

/// Integrand of the test functional J = integral f(eta, x, t) dt.
using PhaseFunction =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, double)>;

/// Builds the varied family generated by (probe, epsilon) along the
/// segment, measures delta-eta and Delta-eta by finite differences in
/// epsilon, and compares them with the closed-form right-hand sides;
/// also compares the asynchronous variation of J = integral of f dt
/// against its integral expression. Report-only.
TranspositionReport verify_transposition(const GroupFrame& frame,
                                         const TrajectorySegment& segment,
                                         const VariationProbe& probe,
                                         const PhaseFunction& f, double epsilon,
                                         int probe_points = 13,
                                         int quad_intervals = 2000);

}  // namespace nhmech

#endif
