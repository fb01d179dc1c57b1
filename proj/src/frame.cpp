#include "nhmech/frame.hpp"

#include <cmath>

#include "nhmech/errors.hpp"
#include "nhmech/numdiff.hpp"

namespace nhmech {

Eigen::VectorXd ScalarField::grad(const Eigen::VectorXd& x, double t) const {
  if (gradient) return gradient(x, t);
  return numdiff::gradient([&](const Eigen::VectorXd& v) { return value(v, t); },
                           x);
}

double ScalarField::dt(const Eigen::VectorXd& x, double t) const {
  if (time_partial) return time_partial(x, t);
  return numdiff::scalar([&](double s) { return value(x, s); }, t);
}

GroupFrame::GroupFrame(int n, XiFn xi) : n_(n), xi_(std::move(xi)) {}

GroupFrame::GroupFrame(int n, XiFn xi, XiJacFn xi_jacobian)
    : n_(n), xi_(std::move(xi)), xi_jac_(std::move(xi_jacobian)) {}

GroupFrame::GroupFrame(int n, XiFn xi, XiJacFn xi_jacobian, StructureFn structure)
    : n_(n),
      xi_(std::move(xi)),
      xi_jac_(std::move(xi_jacobian)),
      structure_(std::move(structure)) {}

Eigen::MatrixXd GroupFrame::xi_at(const Eigen::VectorXd& x, double t) const {
  if (!xi_) throw Error("frame has no coefficient function");
  if (x.size() != n_)
    throw Error("frame dimension mismatch: expected " + std::to_string(n_) +
                " coordinates, got " + std::to_string(x.size()));
  Eigen::MatrixXd m = xi_(x, t);
  if (m.rows() != n_ + 1 || m.cols() != n_ + 1)
    throw FrameInconsistency("xi must be (n+1)x(n+1)");
  if (m(0, 0) != 1.0)
    throw FrameInconsistency("xi(0,0) must be exactly 1");
  for (int p = 1; p <= n_; ++p)
    if (m(p, 0) != 0.0)
      throw FrameInconsistency("xi(p,0) must be exactly 0");
  return m;
}

Eigen::MatrixXd GroupFrame::block(const Eigen::VectorXd& x, double t) const {
  return xi_at(x, t).bottomRightCorner(n_, n_);
}

Eigen::VectorXd GroupFrame::drift(const Eigen::VectorXd& x, double t) const {
  return xi_at(x, t).row(0).tail(n_).transpose();
}

Eigen::MatrixXd GroupFrame::zeta(const Eigen::VectorXd& x, double t) const {
  const Eigen::MatrixXd m = xi_at(x, t);
  const Eigen::MatrixXd b = m.bottomRightCorner(n_, n_);
  if (numdiff::rcond(b) < rcond_threshold)
    throw SingularFrame("xi block singular while inverting the frame");
  const Eigen::MatrixXd binv = b.inverse();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n_ + 1, n_ + 1);
  z(0, 0) = 1.0;
  z.topRightCorner(1, n_) = -m.row(0).tail(n_) * binv;
  z.bottomRightCorner(n_, n_) = binv;
  return z;
}

double GroupFrame::apply_operator(int mu, const ScalarField& g,
                                  const Eigen::VectorXd& x, double t) const {
  if (mu < 0 || mu > n_) throw Error("operator index out of range");
  const Eigen::MatrixXd m = xi_at(x, t);
  const Eigen::VectorXd grad = g.grad(x, t);
  double out = m.row(mu).tail(n_).dot(grad);
  if (mu == 0) out += g.dt(x, t);
  return out;
}

std::vector<Eigen::MatrixXd> GroupFrame::xi_jacobian(const Eigen::VectorXd& x,
                                                     double t) const {
  if (xi_jac_) return xi_jac_(x, t);
  std::vector<Eigen::MatrixXd> jac(n_);
  Eigen::VectorXd w = x;
  for (int q = 0; q < n_; ++q) {
    const double h = numdiff::step(x[q], fd_step);
    w[q] = x[q] + h;
    const Eigen::MatrixXd mp = xi_(w, t);
    w[q] = x[q] - h;
    const Eigen::MatrixXd mm = xi_(w, t);
    w[q] = x[q];
    jac[q] = (mp - mm) / (2.0 * h);
  }
  return jac;
}

Eigen::MatrixXd GroupFrame::xi_time_derivative(const Eigen::VectorXd& x,
                                               double t) const {
  const double h = numdiff::step(t, fd_step);
  return (xi_(x, t + h) - xi_(x, t - h)) / (2.0 * h);
}

StructureResult GroupFrame::structure_from_commutators(
    const Eigen::VectorXd& x, double t) const {
  const Eigen::MatrixXd m = xi_at(x, t);
  const Eigen::MatrixXd b = m.bottomRightCorner(n_, n_);
  if (numdiff::rcond(b) < rcond_threshold)
    throw SingularFrame("xi block singular while solving for structure coefficients");

  const std::vector<Eigen::MatrixXd> jac = xi_jacobian(x, t);
  const Eigen::MatrixXd mdot = xi_time_derivative(x, t);

  // X_mu applied entrywise to the coefficient functions xi_nu^s.
  auto op_on_xi = [&](int mu, int nu, int s) {
    double v = 0.0;
    for (int c = 0; c < n_; ++c) v += m(mu, 1 + c) * jac[c](nu, 1 + s);
    if (mu == 0) v += mdot(nu, 1 + s);
    return v;
  };

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(b.transpose());
  StructureResult out;
  out.coeffs.c0 = Eigen::MatrixXd::Zero(n_, n_);
  out.coeffs.c.assign(n_, Eigen::MatrixXd::Zero(n_, n_));
  double residual = 0.0;

  Eigen::VectorXd comm(n_);
  for (int p = 1; p <= n_; ++p) {
    for (int s = 0; s < n_; ++s) comm[s] = op_on_xi(0, p, s) - op_on_xi(p, 0, s);
    const Eigen::VectorXd cvec = lu.solve(comm);
    residual = std::max(residual,
                        (b.transpose() * cvec - comm).cwiseAbs().maxCoeff());
    out.coeffs.c0.row(p - 1) = cvec.transpose();
  }
  for (int p = 1; p <= n_; ++p) {
    for (int q = p + 1; q <= n_; ++q) {
      for (int s = 0; s < n_; ++s)
        comm[s] = op_on_xi(p, q, s) - op_on_xi(q, p, s);
      const Eigen::VectorXd cvec = lu.solve(comm);
      residual = std::max(residual,
                          (b.transpose() * cvec - comm).cwiseAbs().maxCoeff());
      for (int r = 0; r < n_; ++r) {
        out.coeffs.c[r](p - 1, q - 1) = cvec[r];
        out.coeffs.c[r](q - 1, p - 1) = -cvec[r];
      }
    }
  }
  out.solve_residual = residual;
  return out;
}

StructureResult GroupFrame::structure_coefficients(const Eigen::VectorXd& x,
                                                   double t, bool validate,
                                                   double tol) const {
  if (!structure_) return structure_from_commutators(x, t);

  StructureResult out;
  out.coeffs = structure_(x, t);
  out.user_supplied = true;
  if (validate) {
    const StructureResult ref = structure_from_commutators(x, t);
    double dev = (out.coeffs.c0 - ref.coeffs.c0).cwiseAbs().maxCoeff();
    for (int r = 0; r < n_; ++r)
      dev = std::max(dev,
                     (out.coeffs.c[r] - ref.coeffs.c[r]).cwiseAbs().maxCoeff());
    out.solve_residual = dev;
    if (dev > tol)
      throw FrameInconsistency(
          "user-supplied structure coefficients deviate from commutators by " +
          std::to_string(dev));
  }
  return out;
}

Eigen::VectorXd GroupFrame::eta_from_velocity(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& xdot,
                                              double t) const {
  if (xdot.size() != n_) throw Error("velocity dimension mismatch");
  const Eigen::MatrixXd m = xi_at(x, t);
  const Eigen::MatrixXd b = m.bottomRightCorner(n_, n_);
  if (numdiff::rcond(b) < rcond_threshold)
    throw SingularFrame("xi block singular in eta_from_velocity");
  return b.transpose().partialPivLu().solve(
      xdot - m.row(0).tail(n_).transpose());
}

Eigen::VectorXd GroupFrame::velocity_from_eta(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& eta,
                                              double t) const {
  if (eta.size() != n_) throw Error("eta dimension mismatch");
  const Eigen::MatrixXd m = xi_at(x, t);
  return m.row(0).tail(n_).transpose() +
         m.bottomRightCorner(n_, n_).transpose() * eta;
}

Eigen::VectorXd GroupFrame::omega_from_dx(const Eigen::VectorXd& x, double t,
                                          const Eigen::VectorXd& dx,
                                          double dt_tangent) const {
  const Eigen::MatrixXd m = xi_at(x, t);
  const Eigen::MatrixXd b = m.bottomRightCorner(n_, n_);
  if (numdiff::rcond(b) < rcond_threshold)
    throw SingularFrame("xi block singular in omega_from_dx");
  Eigen::VectorXd out(n_ + 1);
  out[0] = dt_tangent;
  out.tail(n_) = b.transpose().partialPivLu().solve(
      dx - m.row(0).tail(n_).transpose() * dt_tangent);
  return out;
}

Eigen::VectorXd asynchronous_parameters(const Eigen::VectorXd& omega,
                                        const Eigen::VectorXd& eta,
                                        double Omega0) {
  Eigen::VectorXd out(omega.size() + 1);
  out[0] = Omega0;
  out.tail(omega.size()) = omega + eta * Omega0;
  return out;
}

namespace {

double simpson(const std::function<double(double)>& g, double a, double b,
               int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double acc = g(a) + g(b);
  for (int k = 1; k < intervals; ++k)
    acc += g(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TranspositionReport verify_transposition(const GroupFrame& frame,
                                         const TrajectorySegment& segment,
                                         const VariationProbe& probe,
                                         const PhaseFunction& f, double epsilon,
                                         int probe_points, int quad_intervals) {
  const int n = frame.n();
  const double ht = 1e-6;

  auto eta_base = [&](double t) {
    return frame.eta_from_velocity(segment.x(t), segment.xdot(t), t);
  };
  // Unit-amplitude synchronous displacement delta-x_q = omega_p xi_p^q.
  auto dx_unit = [&](double t) -> Eigen::VectorXd {
    return frame.block(segment.x(t), t).transpose() * probe.omega(t);
  };
  auto x_eps = [&](double t) -> Eigen::VectorXd {
    return segment.x(t) + epsilon * dx_unit(t);
  };
  auto xdot_eps = [&](double t) -> Eigen::VectorXd {
    const double h = numdiff::step(t, ht);
    const Eigen::VectorXd ddx = (dx_unit(t + h) - dx_unit(t - h)) / (2.0 * h);
    return segment.xdot(t) + epsilon * ddx;
  };
  auto eta_eps = [&](double t) {
    return frame.eta_from_velocity(x_eps(t), xdot_eps(t), t);
  };
  auto omega_dot = [&](double t) -> Eigen::VectorXd {
    const double h = numdiff::step(t, ht);
    return (probe.omega(t + h) - probe.omega(t - h)) / (2.0 * h);
  };
  auto bigomega = [&](double t) -> Eigen::VectorXd {
    return probe.omega(t) + eta_base(t) * probe.Omega0(t);
  };

  // Formula side of the synchronous identity.
  auto delta_eta_formula = [&](double t) -> Eigen::VectorXd {
    const auto sc = frame.structure_coefficients(segment.x(t), t);
    const Eigen::VectorXd om = probe.omega(t);
    const Eigen::VectorXd eta = eta_base(t);
    Eigen::VectorXd rhs = omega_dot(t) + sc.coeffs.c0.transpose() * om;
    for (int p = 0; p < n; ++p)
      rhs[p] += eta.dot(sc.coeffs.c[p] * om);
    return rhs;
  };
  // Formula side of the asynchronous identity.
  auto Delta_eta_formula = [&](double t) -> Eigen::VectorXd {
    const auto sc = frame.structure_coefficients(segment.x(t), t);
    const Eigen::VectorXd eta = eta_base(t);
    const Eigen::VectorXd Om = bigomega(t);
    const double h = numdiff::step(t, ht);
    const Eigen::VectorXd Om_dot = (bigomega(t + h) - bigomega(t - h)) / (2.0 * h);
    const double Om0_dot =
        (probe.Omega0(t + h) - probe.Omega0(t - h)) / (2.0 * h);
    Eigen::VectorXd rhs = Om_dot - eta * Om0_dot + sc.coeffs.c0.transpose() * Om;
    for (int p = 0; p < n; ++p)
      rhs[p] += eta.dot(sc.coeffs.c[p] * Om);
    return rhs;
  };

  double dev_sync = 0.0;
  double dev_async = 0.0;
  for (int k = 0; k < probe_points; ++k) {
    const double t =
        segment.t0 + (segment.t1 - segment.t0) * (k + 0.5) / probe_points;
    const Eigen::VectorXd eta0 = eta_base(t);
    const Eigen::VectorXd d_num = (eta_eps(t) - eta0) / epsilon;
    dev_sync = std::max(dev_sync,
                        (d_num - delta_eta_formula(t)).cwiseAbs().maxCoeff());

    const double tau = t + epsilon * probe.Omega0(t);
    const Eigen::VectorXd D_num = (eta_eps(tau) - eta0) / epsilon;
    dev_async = std::max(dev_async,
                         (D_num - Delta_eta_formula(t)).cwiseAbs().maxCoeff());
  }

  // Functional J = integral of f(eta, x, t) dt with shifted endpoints.
  auto f_base = [&](double t) { return f(eta_base(t), segment.x(t), t); };
  auto f_eps = [&](double t) { return f(eta_eps(t), x_eps(t), t); };

  TranspositionReport report{};
  report.dev_sync = dev_sync;
  report.dev_async = dev_async;
  report.epsilon = epsilon;

  const double j0 = simpson(f_base, segment.t0, segment.t1, quad_intervals);
  const double a1 = segment.t0 + epsilon * probe.Omega0(segment.t0);
  const double b1 = segment.t1 + epsilon * probe.Omega0(segment.t1);
  const double j1 = simpson(f_eps, a1, b1, quad_intervals);
  const double dj_num = (j1 - j0) / epsilon;

  // Integrand of the formula side: Delta f + f * dOmega_0/dt, with
  // Delta f = Omega_mu X_mu f + (df/deta_p) Delta eta_p.
  auto integrand_formula = [&](double t) {
    const Eigen::VectorXd x = segment.x(t);
    const Eigen::VectorXd eta = eta_base(t);
    const Eigen::MatrixXd m = frame.xi_at(x, t);
    const Eigen::VectorXd grad_x = numdiff::gradient(
        [&](const Eigen::VectorXd& v) { return f(eta, v, t); }, x);
    const Eigen::VectorXd grad_eta = numdiff::gradient(
        [&](const Eigen::VectorXd& v) { return f(v, x, t); }, eta);
    const double f_t =
        numdiff::scalar([&](double s) { return f(eta, x, s); }, t);
    const Eigen::VectorXd Om = bigomega(t);
    const double Om0 = probe.Omega0(t);
    double df = Om0 * (f_t + m.row(0).tail(n).dot(grad_x));
    for (int p = 0; p < n; ++p)
      df += Om[p] * m.row(p + 1).tail(n).dot(grad_x);
    df += grad_eta.dot(Delta_eta_formula(t));
    const double h = numdiff::step(t, ht);
    const double Om0_dot =
        (probe.Omega0(t + h) - probe.Omega0(t - h)) / (2.0 * h);
    return df + f(eta, x, t) * Om0_dot;
  };
  const double dj_formula =
      simpson(integrand_formula, segment.t0, segment.t1, quad_intervals);
  report.dev_functional = std::abs(dj_num - dj_formula);
  return report;
}

}  // namespace nhmech
