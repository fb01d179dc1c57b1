#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nhmech/constraints.hpp"
#include "nhmech/errors.hpp"
#include "nhmech/models.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace nhmech;

namespace {

GroupFrame cartesian(int n) {
  return GroupFrame(n, [n](const VectorXd&, double) {
    return MatrixXd::Identity(n + 1, n + 1);
  });
}

/// eta_3 = a eta_1: constant-coefficient linear constraint.
ConstraintSet linear_constraint(double a) {
  ConstraintSet cs;
  cs.m = 2;
  cs.n = 3;
  cs.phi = [a](const VectorXd& e, const VectorXd&, double) {
    return VectorXd::Constant(1, a * e[0]);
  };
  cs.dphi_deta = [a](const VectorXd&, const VectorXd&, double) {
    MatrixXd d(1, 2);
    d << a, 0.0;
    return d;
  };
  return cs;
}

/// eta_3 = (eta_1^2 + eta_2^2) / (2a): the nonlinear benchmark, with
/// only phi supplied so the finite-difference partials are exercised.
ConstraintSet quadratic_constraint(double a) {
  ConstraintSet cs;
  cs.m = 2;
  cs.n = 3;
  cs.phi = [a](const VectorXd& e, const VectorXd&, double) {
    return VectorXd::Constant(1, (e[0] * e[0] + e[1] * e[1]) / (2.0 * a));
  };
  return cs;
}

struct Rng {
  std::uint64_t s = 0x2545f4914f6cdd1dull;
  double next() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return 2.0 * static_cast<double>(s >> 11) / 9007199254740992.0 - 1.0;
  }
  VectorXd vec(int size, double scale = 1.0) {
    VectorXd v(size);
    for (int i = 0; i < size; ++i) v[i] = scale * next();
    return v;
  }
};

}  // namespace

TEST_CASE("complete_eta fills the trailing block") {
  const VectorXd x = VectorXd::Zero(3);
  SUBCASE("zero map") {
    ConstraintSet cs = linear_constraint(0.0);
    const VectorXd eta =
        complete_eta(cs, (VectorXd(2) << 0.7, -0.2).finished(), x, 0.0);
    CHECK(eta[2] == 0.0);
  }
  SUBCASE("linear knife-edge map") {
    ConstraintSet cs = linear_constraint(0.4);
    const VectorXd eta =
        complete_eta(cs, (VectorXd(2) << 0.5, 2.0).finished(), x, 0.0);
    CHECK(eta[0] == 0.5);
    CHECK(eta[1] == 2.0);
    CHECK(eta[2] == doctest::Approx(0.2));
    CHECK(admissibility_residual(cs, eta, x, 0.0) == 0.0);
  }
  SUBCASE("quadratic benchmark") {
    ConstraintSet cs = quadratic_constraint(2.0);
    const VectorXd eta =
        complete_eta(cs, (VectorXd(2) << 1.0, 2.0).finished(), x, 0.0);
    CHECK(eta[2] == doctest::Approx(1.25));
  }
}

TEST_CASE("non-finite phi output is rejected") {
  ConstraintSet cs;
  cs.m = 1;
  cs.n = 2;
  cs.phi = [](const VectorXd&, const VectorXd&, double) {
    return VectorXd::Constant(1, std::nan(""));
  };
  CHECK_THROWS_AS(complete_eta(cs, VectorXd::Ones(1), VectorXd::Zero(2), 0.0),
                  Error);
}

TEST_CASE("admissible_omega maps the dependent components") {
  const VectorXd x = VectorXd::Zero(3);
  SUBCASE("zero input") {
    ConstraintSet cs = quadratic_constraint(1.0);
    const VectorXd omega =
        admissible_omega(cs, VectorXd::Zero(2), VectorXd::Ones(2), x, 0.0);
    CHECK(omega.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("linear constraint") {
    ConstraintSet cs = linear_constraint(0.7);
    const VectorXd omega = admissible_omega(
        cs, (VectorXd(2) << 1.0, 0.0).finished(), VectorXd::Zero(2), x, 0.0);
    CHECK(omega[0] == 1.0);
    CHECK(omega[1] == 0.0);
    CHECK(omega[2] == doctest::Approx(0.7));
  }
  SUBCASE("quadratic benchmark at eta = (u, v)") {
    ConstraintSet cs = quadratic_constraint(0.5);
    const VectorXd eta_i = (VectorXd(2) << 0.9, -0.3).finished();
    const VectorXd omega = admissible_omega(
        cs, (VectorXd(2) << 1.0, 0.0).finished(), eta_i, x, 0.0);
    CHECK(omega[2] == doctest::Approx(0.9 / 0.5).epsilon(1e-7));
  }
}

TEST_CASE("Chetaev contraction vanishes for admissible omega") {
  ConstraintSet cs = quadratic_constraint(0.8);
  const VectorXd x = VectorXd::Zero(3);
  Rng rng;
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd eta_i = rng.vec(2);
    const VectorXd omega_i = rng.vec(2);
    const VectorXd omega = admissible_omega(cs, omega_i, eta_i, x, 0.0);
    // df/deta = (-dphi/deta, 1) against the full omega.
    const MatrixXd d = cs.dphi_deta_at(eta_i, x, 0.0);
    const double contraction =
        omega[2] - d(0, 0) * omega[0] - d(0, 1) * omega[1];
    CHECK(std::abs(contraction) <= 1e-14);
  }
}

TEST_CASE("finite-difference partials agree with analytic ones") {
  const auto qp = get_model("quadratic_constraint_particle", {{"a", 0.7}});
  ConstraintSet fd = quadratic_constraint(0.7);  // phi only
  const ConstraintSet& an = *qp.model.constraints;
  Rng rng;
  const VectorXd eta_i = rng.vec(2);
  const VectorXd x = rng.vec(3);
  CHECK((fd.dphi_deta_at(eta_i, x, 0.0) - an.dphi_deta_at(eta_i, x, 0.0))
            .cwiseAbs()
            .maxCoeff() < 1e-8);
  const auto fd_hess = fd.d2_eta_eta(eta_i, x, 0.0);
  const auto an_hess = an.d2_eta_eta(eta_i, x, 0.0);
  CHECK((fd_hess[0] - an_hess[0]).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((fd.d2_x_eta(eta_i, x, 0.0)[0]).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((fd.d2_t_eta(eta_i, x, 0.0)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("k coefficients vanish with commuting operators") {
  ConstraintSet cs = quadratic_constraint(1.0);
  const GroupFrame frame = cartesian(3);
  const VectorXd eta =
      complete_eta(cs, (VectorXd(2) << 0.4, 0.6).finished(), VectorXd::Zero(3),
                   0.0);
  const ReductionCoefficients k =
      k_coefficients(frame, cs, VectorXd::Zero(3), eta, 0.0);
  CHECK(k.k0k.cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.k0a.cwiseAbs().maxCoeff() == 0.0);
  for (int q = 0; q < 3; ++q) {
    CHECK(k.kqk[q].cwiseAbs().maxCoeff() == 0.0);
    CHECK(k.kqa[q].cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("k coefficients reduce to C with no constraints active") {
  const auto rb = get_model("free_rigid_body");
  const GroupFrame& frame = rb.model.frame;
  // m = n: empty dependent block.
  ConstraintSet cs;
  cs.m = 3;
  cs.n = 3;
  cs.phi = [](const VectorXd&, const VectorXd&, double) {
    return VectorXd(0);
  };
  cs.dphi_deta = [](const VectorXd&, const VectorXd&, double) {
    return MatrixXd(0, 3);
  };
  const VectorXd x = rb.default_initial.x;
  const VectorXd eta = rb.default_initial.eta_i;
  const ReductionCoefficients k = k_coefficients(frame, cs, x, eta, 0.0);
  const StructureCoefficients sc = frame.structure_coefficients(x, 0.0).coeffs;
  for (int j = 0; j < 3; ++j)
    for (int kk = 0; kk < 3; ++kk) {
      CHECK(k.k0k(j, kk) == doctest::Approx(sc.c0(j, kk)));
      for (int q = 0; q < 3; ++q)
        CHECK(k.kqk[q](j, kk) == doctest::Approx(sc.c[kk](q, j)));
    }
}

TEST_CASE("k coefficients match a dense index-by-index assembly") {
  const auto rb = get_model("free_rigid_body");
  const GroupFrame& frame = rb.model.frame;
  ConstraintSet cs = linear_constraint(0.6);
  const VectorXd x = rb.default_initial.x;
  const VectorXd eta_i = (VectorXd(2) << 0.3, -0.5).finished();
  const VectorXd eta = complete_eta(cs, eta_i, x, 0.0);
  const ReductionCoefficients k = k_coefficients(frame, cs, x, eta, 0.0);

  const StructureCoefficients sc = frame.structure_coefficients(x, 0.0).coeffs;
  const MatrixXd d = cs.dphi_deta_at(eta_i, x, 0.0);
  const int m = 2, n = 3;
  for (int j = 0; j < m; ++j) {
    for (int kk = 0; kk < m; ++kk) {
      double v = sc.c0(j, kk);
      for (int b = 0; b < n - m; ++b) v += sc.c0(m + b, kk) * d(b, j);
      CHECK(k.k0k(j, kk) == doctest::Approx(v).epsilon(1e-12));
      for (int q = 0; q < n; ++q) {
        double w = sc.c[kk](q, j);
        for (int b = 0; b < n - m; ++b) w += sc.c[kk](q, m + b) * d(b, j);
        CHECK(k.kqk[q](j, kk) == doctest::Approx(w).epsilon(1e-12));
      }
    }
    for (int aa = 0; aa < n - m; ++aa) {
      double v = sc.c0(j, m + aa);
      for (int b = 0; b < n - m; ++b) v += sc.c0(m + b, m + aa) * d(b, j);
      CHECK(k.k0a(j, aa) == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("starred operator") {
  ScalarField g{[](const VectorXd& x, double) { return x[2]; }, nullptr,
                nullptr};
  const VectorXd x = (VectorXd(3) << 0.1, 0.2, 0.3).finished();
  SUBCASE("no dependent block leaves X_j unchanged") {
    ConstraintSet cs;
    cs.m = 3;
    cs.n = 3;
    cs.phi = [](const VectorXd&, const VectorXd&, double) {
      return VectorXd(0);
    };
    cs.dphi_deta = [](const VectorXd&, const VectorXd&, double) {
      return MatrixXd(0, 3);
    };
    const GroupFrame frame = cartesian(3);
    CHECK(starred_apply(frame, cs, 2, g, VectorXd::Zero(3), x, 0.0) ==
          doctest::Approx(1.0));
  }
  SUBCASE("eta-independent phi still contributes its Jacobian") {
    ConstraintSet cs = linear_constraint(0.0);
    const GroupFrame frame = cartesian(3);
    CHECK(starred_apply(frame, cs, 0, g, VectorXd::Zero(2), x, 0.0) ==
          doctest::Approx(0.0));
  }
  SUBCASE("quadratic benchmark, G = x_3") {
    ConstraintSet cs = quadratic_constraint(0.5);
    const GroupFrame frame = cartesian(3);
    const VectorXd eta_i = (VectorXd(2) << 0.8, -0.1).finished();
    CHECK(starred_apply(frame, cs, 0, g, eta_i, x, 0.0) ==
          doctest::Approx(0.8 / 0.5).epsilon(1e-7));
    CHECK_THROWS_AS(starred_apply(frame, cs, 2, g, eta_i, x, 0.0), Error);
  }
}

TEST_CASE("a_star for a constant-coefficient linear constraint is zero") {
  ConstraintSet cs = linear_constraint(0.4);
  const GroupFrame frame = cartesian(3);
  const AStarResult r =
      a_star(frame, cs, (VectorXd(2) << 0.3, 0.7).finished(),
             VectorXd::Zero(3), 0.0, (VectorXd(2) << 1.0, -2.0).finished());
  CHECK(r.value.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a_star of the quadratic benchmark is the curvature term") {
  const double a = 2.0;
  const auto qp = get_model("quadratic_constraint_particle", {{"a", a}});
  const ConstraintSet& cs = *qp.model.constraints;
  const GroupFrame frame = cartesian(3);
  const VectorXd eta_i = (VectorXd(2) << 0.5, -0.8).finished();
  const VectorXd eta_dot = (VectorXd(2) << 0.3, 0.7).finished();
  const AStarResult r =
      a_star(frame, cs, eta_i, VectorXd::Zero(3), 0.0, eta_dot);
  CHECK(r.base.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.value(0, 0) == doctest::Approx(0.3 / a).epsilon(1e-10));
  CHECK(r.value(0, 1) == doctest::Approx(0.7 / a).epsilon(1e-10));
}

TEST_CASE("a_star matches a term-by-term assembly on SO(3) + linear") {
  const auto rb = get_model("free_rigid_body");
  const GroupFrame& frame = rb.model.frame;
  ConstraintSet cs = linear_constraint(0.6);
  const VectorXd x = rb.default_initial.x;
  const VectorXd eta_i = (VectorXd(2) << 0.3, -0.5).finished();
  const VectorXd eta_dot = (VectorXd(2) << 0.2, 0.9).finished();
  const AStarResult r = a_star(frame, cs, eta_i, x, 0.0, eta_dot);

  // Dense oracle, straight from the definition with explicit loops.
  const int m = 2, n = 3;
  const VectorXd eta = complete_eta(cs, eta_i, x, 0.0);
  const VectorXd xdot = frame.velocity_from_eta(x, eta, 0.0);
  const MatrixXd d = cs.dphi_deta_at(eta_i, x, 0.0);
  const StructureCoefficients sc = frame.structure_coefficients(x, 0.0).coeffs;
  const MatrixXd xi = frame.xi_at(x, 0.0);
  for (int j = 0; j < m; ++j) {
    // phi is eta-linear with constant coefficients and x-free, so the
    // total-derivative and X* terms vanish; only the K terms remain.
    double k_alpha = sc.c0(j, 2);
    for (int b = 0; b < 1; ++b) k_alpha += sc.c0(2, 2) * d(b, j);
    for (int q = 0; q < n; ++q) {
      double kq = sc.c[2](q, j);
      kq += sc.c[2](q, 2) * d(0, j);
      k_alpha += kq * eta[q];
    }
    double k_k = 0.0;
    for (int kk = 0; kk < m; ++kk) {
      double term = sc.c0(j, kk) + sc.c0(2, kk) * d(0, j);
      for (int q = 0; q < n; ++q)
        term += (sc.c[kk](q, j) + sc.c[kk](q, 2) * d(0, j)) * eta[q];
      k_k += term * d(0, kk);
    }
    const double oracle = k_alpha - k_k;
    CHECK(r.value(0, j) == doctest::Approx(oracle).epsilon(1e-10));
  }
  (void)xdot;
  (void)xi;
}

TEST_CASE("a_star is affine in eta_dot") {
  const auto qp = get_model("quadratic_constraint_particle");
  const ConstraintSet& cs = *qp.model.constraints;
  const GroupFrame& frame = qp.model.frame;
  Rng rng;
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd eta_i = rng.vec(2);
    const VectorXd x = rng.vec(3);
    const VectorXd d1 = rng.vec(2);
    const VectorXd d2 = rng.vec(2);
    const MatrixXd base = a_star(frame, cs, eta_i, x, 0.0, VectorXd::Zero(2)).value;
    const MatrixXd v1 = a_star(frame, cs, eta_i, x, 0.0, d1).value;
    const MatrixXd v2 = a_star(frame, cs, eta_i, x, 0.0, d2).value;
    const MatrixXd v12 = a_star(frame, cs, eta_i, x, 0.0, d1 + d2).value;
    CHECK((v12 - v1 - v2 + base).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("a_holder agrees with a_star where the viewpoints coincide") {
  SUBCASE("constant linear constraint: both vanish") {
    ConstraintSet cs = linear_constraint(0.4);
    const GroupFrame frame = cartesian(3);
    const VectorXd eta_i = (VectorXd(2) << 0.3, 0.7).finished();
    const VectorXd eta = complete_eta(cs, eta_i, VectorXd::Zero(3), 0.0);
    const MatrixXd h = a_holder(frame, cs, eta, VectorXd::Zero(3), 0.0,
                                (VectorXd(2) << 1.0, 2.0).finished());
    CHECK(h.cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("quadratic benchmark with all C zero") {
    const auto qp = get_model("quadratic_constraint_particle");
    const ConstraintSet& cs = *qp.model.constraints;
    const GroupFrame& frame = qp.model.frame;
    const VectorXd eta_i = (VectorXd(2) << 0.6, -0.2).finished();
    const VectorXd x = (VectorXd(3) << 0.1, 0.2, 0.3).finished();
    const VectorXd eta_dot = (VectorXd(2) << 0.5, 0.4).finished();
    const VectorXd eta = complete_eta(cs, eta_i, x, 0.0);
    const MatrixXd h = a_holder(frame, cs, eta, x, 0.0, eta_dot);
    const AStarResult s = a_star(frame, cs, eta_i, x, 0.0, eta_dot);
    CHECK((h - s.value).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("SO(3) with a linear constraint: difference reported, finite") {
    const auto rb = get_model("free_rigid_body");
    ConstraintSet cs = linear_constraint(0.6);
    const VectorXd eta_i = (VectorXd(2) << 0.3, -0.5).finished();
    const VectorXd x = rb.default_initial.x;
    const VectorXd eta = complete_eta(cs, eta_i, x, 0.0);
    const VectorXd eta_dot = (VectorXd(2) << 0.2, 0.9).finished();
    const MatrixXd h = a_holder(rb.model.frame, cs, eta, x, 0.0, eta_dot);
    const AStarResult s = a_star(rb.model.frame, cs, eta_i, x, 0.0, eta_dot);
    const double diff = (h - s.value).cwiseAbs().maxCoeff();
    MESSAGE("holder-vs-starred deviation on admissible state: ", diff);
    CHECK(std::isfinite(diff));
  }
}
