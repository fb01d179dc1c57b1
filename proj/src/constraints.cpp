#include "nhmech/constraints.hpp"

#include <cmath>

#include "nhmech/errors.hpp"
#include "nhmech/numdiff.hpp"

namespace nhmech {

Eigen::VectorXd ConstraintSet::phi_at(const Eigen::VectorXd& eta_i,
                                      const Eigen::VectorXd& x, double t) const {
  Eigen::VectorXd v = phi(eta_i, x, t);
  if (v.size() != n - m) throw Error("phi must return n-m components");
  if (!v.allFinite()) throw Error("phi produced a non-finite value");
  return v;
}

Eigen::MatrixXd ConstraintSet::dphi_deta_at(const Eigen::VectorXd& eta_i,
                                            const Eigen::VectorXd& x,
                                            double t) const {
  if (dphi_deta) return dphi_deta(eta_i, x, t);
  return numdiff::jacobian(
      [&](const Eigen::VectorXd& e) { return phi_at(e, x, t); }, eta_i, fd_step);
}

Eigen::MatrixXd ConstraintSet::dphi_dx_at(const Eigen::VectorXd& eta_i,
                                          const Eigen::VectorXd& x,
                                          double t) const {
  if (dphi_dx) return dphi_dx(eta_i, x, t);
  return numdiff::jacobian(
      [&](const Eigen::VectorXd& v) { return phi_at(eta_i, v, t); }, x, fd_step);
}

Eigen::VectorXd ConstraintSet::dphi_dt_at(const Eigen::VectorXd& eta_i,
                                          const Eigen::VectorXd& x,
                                          double t) const {
  if (dphi_dt) return dphi_dt(eta_i, x, t);
  const double h = numdiff::step(t, fd_step);
  return (phi_at(eta_i, x, t + h) - phi_at(eta_i, x, t - h)) / (2.0 * h);
}

std::vector<Eigen::MatrixXd> ConstraintSet::d2_eta_eta(
    const Eigen::VectorXd& eta_i, const Eigen::VectorXd& x, double t) const {
  if (d2phi_eta_eta) return d2phi_eta_eta(eta_i, x, t);
  const int na = n - m;
  std::vector<Eigen::MatrixXd> out(na, Eigen::MatrixXd::Zero(m, m));
  if (dphi_deta) {
    // One finite-difference level on the analytic Jacobian.
    Eigen::VectorXd e = eta_i;
    for (int i = 0; i < m; ++i) {
      const double h = numdiff::step(eta_i[i], fd_step);
      e[i] = eta_i[i] + h;
      const Eigen::MatrixXd jp = dphi_deta(e, x, t);
      e[i] = eta_i[i] - h;
      const Eigen::MatrixXd jm = dphi_deta(e, x, t);
      e[i] = eta_i[i];
      const Eigen::MatrixXd col = (jp - jm) / (2.0 * h);
      for (int a = 0; a < na; ++a) out[a].row(i) = col.row(a);
    }
    // Symmetrize; the mixed partials commute for smooth phi.
    for (auto& h : out) h = 0.5 * (h + h.transpose()).eval();
    return out;
  }
  Eigen::VectorXd e = eta_i;
  for (int i = 0; i < m; ++i) {
    const double hi = numdiff::step2(eta_i[i], fd_step);
    for (int j = i; j < m; ++j) {
      Eigen::VectorXd d(na);
      if (i == j) {
        e[i] = eta_i[i] + hi;
        const Eigen::VectorXd fp = phi_at(e, x, t);
        e[i] = eta_i[i] - hi;
        const Eigen::VectorXd fm = phi_at(e, x, t);
        e[i] = eta_i[i];
        d = (fp - 2.0 * phi_at(e, x, t) + fm) / (hi * hi);
      } else {
        const double hj = numdiff::step2(eta_i[j], fd_step);
        e[i] = eta_i[i] + hi;
        e[j] = eta_i[j] + hj;
        const Eigen::VectorXd fpp = phi_at(e, x, t);
        e[j] = eta_i[j] - hj;
        const Eigen::VectorXd fpm = phi_at(e, x, t);
        e[i] = eta_i[i] - hi;
        const Eigen::VectorXd fmm = phi_at(e, x, t);
        e[j] = eta_i[j] + hj;
        const Eigen::VectorXd fmp = phi_at(e, x, t);
        e[i] = eta_i[i];
        e[j] = eta_i[j];
        d = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
      }
      for (int a = 0; a < na; ++a) {
        out[a](i, j) = d[a];
        out[a](j, i) = d[a];
      }
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> ConstraintSet::d2_x_eta(
    const Eigen::VectorXd& eta_i, const Eigen::VectorXd& x, double t) const {
  if (d2phi_x_eta) return d2phi_x_eta(eta_i, x, t);
  const int na = n - m;
  std::vector<Eigen::MatrixXd> out(na, Eigen::MatrixXd::Zero(n, m));
  Eigen::VectorXd w = x;
  for (int q = 0; q < n; ++q) {
    const double h = dphi_deta ? numdiff::step(x[q], fd_step)
                               : numdiff::step2(x[q], fd_step);
    w[q] = x[q] + h;
    const Eigen::MatrixXd jp = dphi_deta_at(eta_i, w, t);
    w[q] = x[q] - h;
    const Eigen::MatrixXd jm = dphi_deta_at(eta_i, w, t);
    w[q] = x[q];
    const Eigen::MatrixXd d = (jp - jm) / (2.0 * h);
    for (int a = 0; a < na; ++a) out[a].row(q) = d.row(a);
  }
  return out;
}

Eigen::MatrixXd ConstraintSet::d2_t_eta(const Eigen::VectorXd& eta_i,
                                        const Eigen::VectorXd& x,
                                        double t) const {
  if (d2phi_t_eta) return d2phi_t_eta(eta_i, x, t);
  const double h = dphi_deta ? numdiff::step(t, fd_step)
                             : numdiff::step2(t, fd_step);
  return (dphi_deta_at(eta_i, x, t + h) - dphi_deta_at(eta_i, x, t - h)) /
         (2.0 * h);
}

Eigen::VectorXd complete_eta(const ConstraintSet& cs,
                             const Eigen::VectorXd& eta_i,
                             const Eigen::VectorXd& x, double t) {
  if (eta_i.size() != cs.m) throw Error("eta_i dimension mismatch");
  Eigen::VectorXd eta(cs.n);
  eta.head(cs.m) = eta_i;
  eta.tail(cs.n - cs.m) = cs.phi_at(eta_i, x, t);
  return eta;
}

double admissibility_residual(const ConstraintSet& cs,
                              const Eigen::VectorXd& eta_full,
                              const Eigen::VectorXd& x, double t) {
  const Eigen::VectorXd phi = cs.phi_at(eta_full.head(cs.m), x, t);
  return (eta_full.tail(cs.n - cs.m) - phi).cwiseAbs().maxCoeff();
}

Eigen::VectorXd admissible_omega(const ConstraintSet& cs,
                                 const Eigen::VectorXd& omega_i,
                                 const Eigen::VectorXd& eta_i,
                                 const Eigen::VectorXd& x, double t) {
  Eigen::VectorXd omega(cs.n);
  omega.head(cs.m) = omega_i;
  omega.tail(cs.n - cs.m) = cs.dphi_deta_at(eta_i, x, t) * omega_i;
  return omega;
}

ReductionCoefficients k_coefficients(const GroupFrame& frame,
                                     const ConstraintSet& cs,
                                     const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& eta_full,
                                     double t) {
  const int n = cs.n;
  const int m = cs.m;
  const int na = n - m;
  const StructureCoefficients sc =
      frame.structure_coefficients(x, t).coeffs;
  const Eigen::MatrixXd d = cs.dphi_deta_at(eta_full.head(m), x, t);

  ReductionCoefficients k;
  k.k0k.resize(m, m);
  k.k0a.resize(m, na);
  k.kqk.assign(n, Eigen::MatrixXd(m, m));
  k.kqa.assign(n, Eigen::MatrixXd(m, na));

  for (int j = 0; j < m; ++j) {
    for (int kk = 0; kk < m; ++kk) {
      double v = sc.c0(j, kk);
      for (int b = 0; b < na; ++b) v += sc.c0(m + b, kk) * d(b, j);
      k.k0k(j, kk) = v;
    }
    for (int a = 0; a < na; ++a) {
      double v = sc.c0(j, m + a);
      for (int b = 0; b < na; ++b) v += sc.c0(m + b, m + a) * d(b, j);
      k.k0a(j, a) = v;
    }
    for (int q = 0; q < n; ++q) {
      for (int kk = 0; kk < m; ++kk) {
        double v = sc.c[kk](q, j);
        for (int b = 0; b < na; ++b) v += sc.c[kk](q, m + b) * d(b, j);
        k.kqk[q](j, kk) = v;
      }
      for (int a = 0; a < na; ++a) {
        double v = sc.c[m + a](q, j);
        for (int b = 0; b < na; ++b) v += sc.c[m + a](q, m + b) * d(b, j);
        k.kqa[q](j, a) = v;
      }
    }
  }
  return k;
}

double starred_apply(const GroupFrame& frame, const ConstraintSet& cs, int j,
                     const ScalarField& g, const Eigen::VectorXd& eta_i,
                     const Eigen::VectorXd& x, double t) {
  if (j < 0 || j >= cs.m) throw Error("starred operator index must be < m");
  const Eigen::MatrixXd d = cs.dphi_deta_at(eta_i, x, t);
  double out = frame.apply_operator(1 + j, g, x, t);
  for (int b = 0; b < cs.n - cs.m; ++b)
    out += d(b, j) * frame.apply_operator(1 + cs.m + b, g, x, t);
  return out;
}

AStarResult a_star(const GroupFrame& frame, const ConstraintSet& cs,
                   const Eigen::VectorXd& eta_i, const Eigen::VectorXd& x,
                   double t, const Eigen::VectorXd& eta_dot) {
  const int n = cs.n;
  const int m = cs.m;
  const int na = n - m;

  const Eigen::VectorXd eta = complete_eta(cs, eta_i, x, t);
  const Eigen::VectorXd xdot = frame.velocity_from_eta(x, eta, t);
  const Eigen::MatrixXd d = cs.dphi_deta_at(eta_i, x, t);
  const Eigen::MatrixXd dpx = cs.dphi_dx_at(eta_i, x, t);
  const ReductionCoefficients k = k_coefficients(frame, cs, x, eta, t);

  const std::vector<Eigen::MatrixXd> hee = cs.d2_eta_eta(eta_i, x, t);
  const std::vector<Eigen::MatrixXd> hxe = cs.d2_x_eta(eta_i, x, t);
  const Eigen::MatrixXd hte = cs.d2_t_eta(eta_i, x, t);

  const Eigen::MatrixXd xi = frame.xi_at(x, t);

  AStarResult out;
  out.base.resize(na, m);
  out.curvature = hee;

  for (int a = 0; a < na; ++a) {
    for (int j = 0; j < m; ++j) {
      // x,t advection of d(phi_a)/d(eta_j); the eta_dot part is split off.
      double v = hte(a, j);
      for (int q = 0; q < n; ++q) v += xdot[q] * hxe[a](q, j);

      // X*_j phi_a = X_j phi_a + d(b,j) X_b phi_a, spatial parts only.
      double xstar = xi.row(1 + j).tail(n).dot(dpx.row(a));
      for (int b = 0; b < na; ++b)
        xstar += d(b, j) * xi.row(1 + m + b).tail(n).dot(dpx.row(a));
      v -= xstar;

      double kalpha = k.k0a(j, a);
      for (int q = 0; q < n; ++q) kalpha += k.kqa[q](j, a) * eta[q];
      v += kalpha;

      for (int kk = 0; kk < m; ++kk) {
        double kterm = k.k0k(j, kk);
        for (int q = 0; q < n; ++q) kterm += k.kqk[q](j, kk) * eta[q];
        v -= kterm * d(a, kk);
      }
      out.base(a, j) = v;
    }
  }

  out.value = out.base;
  if (eta_dot.size() > 0) {
    for (int a = 0; a < na; ++a)
      out.value.row(a) += (hee[a] * eta_dot).transpose();
  }
  return out;
}

Eigen::MatrixXd a_holder(const GroupFrame& frame, const ConstraintSet& cs,
                         const Eigen::VectorXd& eta_full,
                         const Eigen::VectorXd& x, double t,
                         const Eigen::VectorXd& eta_dot) {
  const int n = cs.n;
  const int m = cs.m;
  const int na = n - m;
  const Eigen::VectorXd eta_i = eta_full.head(m);

  const Eigen::VectorXd xdot = frame.velocity_from_eta(x, eta_full, t);
  const Eigen::MatrixXd d = cs.dphi_deta_at(eta_i, x, t);
  const Eigen::MatrixXd dpx = cs.dphi_dx_at(eta_i, x, t);
  const StructureCoefficients sc = frame.structure_coefficients(x, t).coeffs;

  const std::vector<Eigen::MatrixXd> hee = cs.d2_eta_eta(eta_i, x, t);
  const std::vector<Eigen::MatrixXd> hxe = cs.d2_x_eta(eta_i, x, t);
  const Eigen::MatrixXd hte = cs.d2_t_eta(eta_i, x, t);
  const Eigen::MatrixXd xi = frame.xi_at(x, t);

  // Grouped C-combinations with the raw eta: G(i, p) =
  // C_{0i}^p + C_{qi}^p eta_q, p ranging over all of 1..n.
  Eigen::MatrixXd grouped(m, n);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < n; ++p) {
      double v = sc.c0(i, p);
      for (int q = 0; q < n; ++q) v += sc.c[p](q, i) * eta_full[q];
      grouped(i, p) = v;
    }
  // Same combination with first subscript in the dependent range.
  Eigen::MatrixXd grouped_beta(na, n);
  for (int b = 0; b < na; ++b)
    for (int p = 0; p < n; ++p) {
      double v = sc.c0(m + b, p);
      for (int q = 0; q < n; ++q) v += sc.c[p](q, m + b) * eta_full[q];
      grouped_beta(b, p) = v;
    }

  Eigen::MatrixXd out(na, m);
  for (int a = 0; a < na; ++a) {
    for (int i = 0; i < m; ++i) {
      double v = hte(a, i);
      for (int q = 0; q < n; ++q) v += xdot[q] * hxe[a](q, i);
      v += hee[a].row(i).dot(eta_dot);

      double xstar = xi.row(1 + i).tail(n).dot(dpx.row(a));
      for (int b = 0; b < na; ++b)
        xstar += d(b, i) * xi.row(1 + m + b).tail(n).dot(dpx.row(a));
      v -= xstar;

      double calpha = grouped(i, m + a);
      for (int b = 0; b < na; ++b) calpha += grouped_beta(b, m + a) * d(b, i);
      v += calpha;

      for (int j = 0; j < m; ++j) {
        double cj = grouped(i, j);
        for (int b = 0; b < na; ++b) cj += grouped_beta(b, j) * d(b, i);
        v -= d(a, j) * cj;
      }
      out(a, i) = v;
    }
  }
  return out;
}

}  // namespace nhmech
