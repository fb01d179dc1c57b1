#include "nhmech/dynamics.hpp"

#include <cmath>

#include "nhmech/errors.hpp"
#include "nhmech/numdiff.hpp"

namespace nhmech {

Eigen::VectorXd LagrangianModel::complete(const Eigen::VectorXd& eta_i,
                                          const Eigen::VectorXd& x,
                                          double t) const {
  if (!constraints) return eta_i;
  return complete_eta(*constraints, eta_i, x, t);
}

Eigen::VectorXd LagrangianModel::dL(const Eigen::VectorXd& eta_full,
                                    const Eigen::VectorXd& x, double t) const {
  if (dL_deta) return dL_deta(eta_full, x, t);
  return numdiff::gradient(
      [&](const Eigen::VectorXd& e) { return L(e, x, t); }, eta_full, fd_step);
}

double reduced_lagrangian(const LagrangianModel& model,
                          const Eigen::VectorXd& eta_i,
                          const Eigen::VectorXd& x, double t) {
  return model.L(model.complete(eta_i, x, t), x, t);
}

Eigen::VectorXd reduced_momenta(const LagrangianModel& model,
                                const Eigen::VectorXd& eta_i,
                                const Eigen::VectorXd& x, double t) {
  const Eigen::VectorXd eta = model.complete(eta_i, x, t);
  const Eigen::VectorXd dl = model.dL(eta, x, t);
  if (!model.constraints) return dl;
  const ConstraintSet& cs = *model.constraints;
  const Eigen::MatrixXd d = cs.dphi_deta_at(eta_i, x, t);
  return dl.head(cs.m) + d.transpose() * dl.tail(cs.n - cs.m);
}

Eigen::MatrixXd reduced_hessian(const LagrangianModel& model,
                                const Eigen::VectorXd& eta_i,
                                const Eigen::VectorXd& x, double t) {
  return numdiff::jacobian(
      [&](const Eigen::VectorXd& e) { return reduced_momenta(model, e, x, t); },
      eta_i, model.fd_step);
}

Eigen::VectorXd legendre_invert(const LagrangianModel& model,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& ystar, double t,
                                const Eigen::VectorXd& guess) {
  Eigen::VectorXd eta = guess.size() == model.m()
                            ? guess
                            : Eigen::VectorXd::Zero(model.m());
  for (int it = 0; it < model.newton_max_iter; ++it) {
    const Eigen::VectorXd r = reduced_momenta(model, eta, x, t) - ystar;
    if (r.cwiseAbs().maxCoeff() <= model.tol_newton) return eta;
    const Eigen::MatrixXd jac = reduced_hessian(model, eta, x, t);
    if (numdiff::rcond(jac) < model.rcond_min)
      throw NewtonDivergence("singular reduced Hessian in Legendre inversion");
    eta -= jac.partialPivLu().solve(r);
    if (!eta.allFinite())
      throw NewtonDivergence("Legendre inversion produced non-finite iterate");
  }
  throw NewtonDivergence("Legendre inversion did not converge in " +
                         std::to_string(model.newton_max_iter) + " iterations");
}

double hamiltonian_reduced(const LagrangianModel& model,
                           const Eigen::VectorXd& x,
                           const Eigen::VectorXd& ystar, double t,
                           const Eigen::VectorXd& guess) {
  const Eigen::VectorXd eta = legendre_invert(model, x, ystar, t, guess);
  return eta.dot(ystar) - reduced_lagrangian(model, eta, x, t);
}

Eigen::VectorXd xstar_reduced_lagrangian(const LagrangianModel& model,
                                         const Eigen::VectorXd& eta_i,
                                         const Eigen::VectorXd& x, double t) {
  const int n = model.n();
  const int m = model.m();
  const Eigen::VectorXd grad = numdiff::gradient(
      [&](const Eigen::VectorXd& v) {
        return reduced_lagrangian(model, eta_i, v, t);
      },
      x, model.fd_step);
  const Eigen::MatrixXd xi = model.frame.xi_at(x, t);
  Eigen::VectorXd out(m);
  for (int j = 0; j < m; ++j) out[j] = xi.row(1 + j).tail(n).dot(grad);
  if (model.constraints) {
    const ConstraintSet& cs = *model.constraints;
    const Eigen::MatrixXd d = cs.dphi_deta_at(eta_i, x, t);
    for (int j = 0; j < m; ++j)
      for (int b = 0; b < n - m; ++b)
        out[j] += d(b, j) * xi.row(1 + m + b).tail(n).dot(grad);
  }
  return out;
}

namespace {

/// (K_{0j}^k + K_{qj}^k eta_q) as an m x m matrix, row j, column k.
/// Without constraints the K's collapse to the bare C's.
Eigen::MatrixXd k_contraction(const LagrangianModel& model,
                              const Eigen::VectorXd& eta_full,
                              const Eigen::VectorXd& x, double t) {
  const int n = model.n();
  const int m = model.m();
  Eigen::MatrixXd kt(m, m);
  if (model.constraints) {
    const ReductionCoefficients k =
        k_coefficients(model.frame, *model.constraints, x, eta_full, t);
    for (int j = 0; j < m; ++j)
      for (int kk = 0; kk < m; ++kk) {
        double v = k.k0k(j, kk);
        for (int q = 0; q < n; ++q) v += k.kqk[q](j, kk) * eta_full[q];
        kt(j, kk) = v;
      }
  } else {
    const StructureCoefficients sc =
        model.frame.structure_coefficients(x, t).coeffs;
    for (int j = 0; j < m; ++j)
      for (int kk = 0; kk < m; ++kk) {
        double v = sc.c0(j, kk);
        for (int q = 0; q < n; ++q) v += sc.c[kk](q, j) * eta_full[q];
        kt(j, kk) = v;
      }
  }
  return kt;
}

}  // namespace

LagrangeRhs eom_rhs_lagrange(const LagrangianModel& model,
                             const LagrangeState& s) {
  const int n = model.n();
  const int m = model.m();
  const Eigen::VectorXd eta = model.complete(s.eta_i, s.x, s.t);
  const Eigen::VectorXd xdot = model.frame.velocity_from_eta(s.x, eta, s.t);

  const Eigen::MatrixXd mass = reduced_hessian(model, s.eta_i, s.x, s.t);

  // Advection of y* through (x, t) along the actual motion.
  auto momenta_at = [&](const Eigen::VectorXd& x, double t) {
    return reduced_momenta(model, s.eta_i, x, t);
  };
  const double ht = numdiff::step(s.t, model.fd_step);
  Eigen::VectorXd adv =
      (momenta_at(s.x, s.t + ht) - momenta_at(s.x, s.t - ht)) / (2.0 * ht);
  Eigen::VectorXd w = s.x;
  for (int q = 0; q < n; ++q) {
    const double h = numdiff::step(s.x[q], model.fd_step);
    w[q] = s.x[q] + h;
    const Eigen::VectorXd mp = momenta_at(w, s.t);
    w[q] = s.x[q] - h;
    const Eigen::VectorXd mm = momenta_at(w, s.t);
    w[q] = s.x[q];
    adv += xdot[q] * (mp - mm) / (2.0 * h);
  }

  const Eigen::VectorXd ystar = reduced_momenta(model, s.eta_i, s.x, s.t);
  const Eigen::MatrixXd kt = k_contraction(model, eta, s.x, s.t);
  Eigen::VectorXd rhs = kt * ystar +
                        xstar_reduced_lagrangian(model, s.eta_i, s.x, s.t) -
                        adv;
  Eigen::MatrixXd lhs = mass;

  if (model.constraints && !model.break_astar) {
    const ConstraintSet& cs = *model.constraints;
    const AStarResult astar =
        a_star(model.frame, cs, s.eta_i, s.x, s.t, Eigen::VectorXd());
    const Eigen::VectorXd dl = model.dL(eta, s.x, s.t);
    const Eigen::VectorXd dla = dl.tail(n - m);
    for (int a = 0; a < n - m; ++a) {
      rhs += dla[a] * astar.base.row(a).transpose();
      lhs -= dla[a] * astar.curvature[a];
    }
  }

  if (numdiff::rcond(lhs) < model.rcond_min)
    throw SingularMass("assembled equation-of-motion matrix is singular");

  LagrangeRhs out;
  out.xdot = xdot;
  out.eta_dot = lhs.partialPivLu().solve(rhs);
  return out;
}

HamiltonRhs eom_rhs_hamilton(const LagrangianModel& model, const PhaseState& s,
                             const Eigen::VectorXd& guess) {
  const int n = model.n();
  const int m = model.m();
  HamiltonRhs out;
  out.eta_i = legendre_invert(model, s.x, s.ystar, s.t, guess);

  const LagrangeRhs lagr =
      eom_rhs_lagrange(model, LagrangeState{s.t, s.x, out.eta_i});
  out.xdot = lagr.xdot;
  out.eta_dot = lagr.eta_dot;

  const Eigen::VectorXd eta = model.complete(out.eta_i, s.x, s.t);
  const Eigen::VectorXd ystar = reduced_momenta(model, out.eta_i, s.x, s.t);
  const Eigen::MatrixXd kt = k_contraction(model, eta, s.x, s.t);

  // X*_j H* = -X*_j L* at the inverted eta (Legendre envelope).
  out.ystar_dot = xstar_reduced_lagrangian(model, out.eta_i, s.x, s.t) +
                  kt * ystar;

  if (model.constraints && !model.break_astar) {
    const AStarResult astar =
        a_star(model.frame, *model.constraints, out.eta_i, s.x, s.t,
               lagr.eta_dot);
    const Eigen::VectorXd dl = model.dL(eta, s.x, s.t);
    const Eigen::VectorXd dla = dl.tail(n - m);
    for (int a = 0; a < n - m; ++a)
      out.ystar_dot += dla[a] * astar.value.row(a).transpose();
  }
  return out;
}

double dalembert_residual(const LagrangianModel& model, const LagrangeState& s,
                          const Eigen::VectorXd& eta_dot,
                          const Eigen::VectorXd& omega_i) {
  const int n = model.n();
  const int m = model.m();
  const Eigen::VectorXd eta = model.complete(s.eta_i, s.x, s.t);
  const Eigen::VectorXd xdot = model.frame.velocity_from_eta(s.x, eta, s.t);

  Eigen::VectorXd omega;
  Eigen::VectorXd eta_dot_full(n);
  eta_dot_full.head(m) = eta_dot;
  if (model.constraints) {
    const ConstraintSet& cs = *model.constraints;
    omega = admissible_omega(cs, omega_i, s.eta_i, s.x, s.t);
    // Dependent accelerations along the actual motion: d(phi_alpha)/dt.
    eta_dot_full.tail(n - m) = cs.dphi_dt_at(s.eta_i, s.x, s.t) +
                               cs.dphi_dx_at(s.eta_i, s.x, s.t) * xdot +
                               cs.dphi_deta_at(s.eta_i, s.x, s.t) * eta_dot;
  } else {
    omega = omega_i;
  }

  // Total derivative of dL/deta_p by the chain rule through (eta, x, t).
  auto dl_at = [&](const Eigen::VectorXd& e, const Eigen::VectorXd& x,
                   double t) { return model.dL(e, x, t); };
  const double ht = numdiff::step(s.t, model.fd_step);
  Eigen::VectorXd ddl =
      (dl_at(eta, s.x, s.t + ht) - dl_at(eta, s.x, s.t - ht)) / (2.0 * ht);
  Eigen::VectorXd we = eta;
  for (int p = 0; p < n; ++p) {
    const double h = numdiff::step(eta[p], model.fd_step);
    we[p] = eta[p] + h;
    const Eigen::VectorXd dp = dl_at(we, s.x, s.t);
    we[p] = eta[p] - h;
    const Eigen::VectorXd dm = dl_at(we, s.x, s.t);
    we[p] = eta[p];
    ddl += eta_dot_full[p] * (dp - dm) / (2.0 * h);
  }
  Eigen::VectorXd wx = s.x;
  for (int q = 0; q < n; ++q) {
    const double h = numdiff::step(s.x[q], model.fd_step);
    wx[q] = s.x[q] + h;
    const Eigen::VectorXd dp = dl_at(eta, wx, s.t);
    wx[q] = s.x[q] - h;
    const Eigen::VectorXd dm = dl_at(eta, wx, s.t);
    wx[q] = s.x[q];
    ddl += xdot[q] * (dp - dm) / (2.0 * h);
  }

  const Eigen::VectorXd dl = model.dL(eta, s.x, s.t);
  const StructureCoefficients sc =
      model.frame.structure_coefficients(s.x, s.t).coeffs;
  const Eigen::VectorXd gradL = numdiff::gradient(
      [&](const Eigen::VectorXd& v) { return model.L(eta, v, s.t); }, s.x,
      model.fd_step);
  const Eigen::MatrixXd xi = model.frame.xi_at(s.x, s.t);

  double residual = 0.0;
  for (int p = 0; p < n; ++p) {
    double bracket = ddl[p];
    bracket -= sc.c0.row(p).dot(dl);
    for (int r = 0; r < n; ++r) bracket -= eta.dot(sc.c[r].col(p)) * dl[r];
    bracket -= xi.row(1 + p).tail(n).dot(gradL);
    residual += bracket * omega[p];
  }
  return residual;
}

}  // namespace nhmech
