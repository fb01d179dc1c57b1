#include "nhmech/models.hpp"

#include <cmath>

#include "nhmech/errors.hpp"
#include "nhmech/numdiff.hpp"

namespace nhmech {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd cartesian_xi(int n) {
  return MatrixXd::Identity(n + 1, n + 1);
}

StructureCoefficients zero_structure(int n) {
  StructureCoefficients sc;
  sc.c0 = MatrixXd::Zero(n, n);
  sc.c.assign(n, MatrixXd::Zero(n, n));
  return sc;
}

GroupFrame cartesian_frame(int n) {
  auto xi = [n](const VectorXd&, double) { return cartesian_xi(n); };
  auto jac = [n](const VectorXd&, double) {
    return std::vector<MatrixXd>(n, MatrixXd::Zero(n + 1, n + 1));
  };
  auto structure = [n](const VectorXd&, double) { return zero_structure(n); };
  return GroupFrame(n, xi, jac, structure);
}

/// Body frame on SO(3) in 3-1-3 Euler angles x = (phi, theta, psi);
/// eta are the body components of the angular velocity. Singular where
/// sin(theta) vanishes; shipped initial states keep clear of that band.
GroupFrame so3_body_frame() {
  auto xi = [](const VectorXd& x, double) {
    const double st = std::sin(x[1]), ct = std::cos(x[1]);
    const double sp = std::sin(x[2]), cp = std::cos(x[2]);
    MatrixXd m = MatrixXd::Zero(4, 4);
    m(0, 0) = 1.0;
    m(1, 1) = sp / st;
    m(1, 2) = cp;
    m(1, 3) = -sp * ct / st;
    m(2, 1) = cp / st;
    m(2, 2) = -sp;
    m(2, 3) = -cp * ct / st;
    m(3, 3) = 1.0;
    return m;
  };
  auto structure = [](const VectorXd&, double) {
    StructureCoefficients sc = zero_structure(3);
    // C_pq^r = epsilon_pqr for the body-frame operator family.
    sc.c[0](1, 2) = 1.0;
    sc.c[0](2, 1) = -1.0;
    sc.c[1](2, 0) = 1.0;
    sc.c[1](0, 2) = -1.0;
    sc.c[2](0, 1) = 1.0;
    sc.c[2](1, 0) = -1.0;
    return sc;
  };
  return GroupFrame(3, xi, nullptr, structure);
}

double param(const std::map<std::string, double>& p, const std::string& key) {
  return p.at(key);
}

std::map<std::string, double> merge_params(
    const std::map<std::string, double>& defaults,
    const std::map<std::string, double>& overrides) {
  std::map<std::string, double> out = defaults;
  for (const auto& [key, value] : overrides) {
    if (!out.count(key))
      throw InvalidParameter("unknown parameter '" + key + "'");
    out[key] = value;
  }
  return out;
}

ModelDescriptor build_harmonic_oscillator(
    const std::map<std::string, double>& overrides) {
  const auto p = merge_params({{"mass", 1.0}, {"stiffness", 1.0}}, overrides);
  if (param(p, "mass") <= 0.0) throw InvalidParameter("mass must be positive");
  if (param(p, "stiffness") <= 0.0)
    throw InvalidParameter("stiffness must be positive");

  ModelDescriptor d;
  d.name = "harmonic_oscillator";
  d.n = 1;
  d.m = 1;
  d.parameters = p;
  d.reference = OracleKind::closed_form;
  d.summary = "1-dof oscillator, Cartesian frame, no constraints";

  const double mass = param(p, "mass");
  const double k = param(p, "stiffness");
  d.model.L = [mass, k](const VectorXd& eta, const VectorXd& x, double) {
    return 0.5 * mass * eta[0] * eta[0] - 0.5 * k * x[0] * x[0];
  };
  d.model.dL_deta = [mass](const VectorXd& eta, const VectorXd&, double) {
    return VectorXd::Constant(1, mass * eta[0]);
  };
  d.model.frame = cartesian_frame(1);
  d.model.conservative = true;

  d.default_initial.t = 0.0;
  d.default_initial.x = VectorXd::Constant(1, 1.0);
  d.default_initial.eta_i = VectorXd::Zero(1);
  return d;
}

ModelDescriptor build_free_rigid_body(
    const std::map<std::string, double>& overrides) {
  const auto p =
      merge_params({{"I1", 1.0}, {"I2", 2.0}, {"I3", 3.0}}, overrides);
  const double i1 = param(p, "I1"), i2 = param(p, "I2"), i3 = param(p, "I3");
  if (i1 <= 0.0 || i2 <= 0.0 || i3 <= 0.0)
    throw InvalidParameter("inertias must be positive");

  ModelDescriptor d;
  d.name = "free_rigid_body";
  d.n = 3;
  d.m = 3;
  d.parameters = p;
  d.reference = OracleKind::euler_equations;
  d.summary = "torque-free rigid body, SO(3) body frame, quasi-velocities";

  d.model.L = [i1, i2, i3](const VectorXd& eta, const VectorXd&, double) {
    return 0.5 * (i1 * eta[0] * eta[0] + i2 * eta[1] * eta[1] +
                  i3 * eta[2] * eta[2]);
  };
  d.model.dL_deta = [i1, i2, i3](const VectorXd& eta, const VectorXd&, double) {
    VectorXd out(3);
    out << i1 * eta[0], i2 * eta[1], i3 * eta[2];
    return out;
  };
  d.model.frame = so3_body_frame();
  d.model.conservative = true;

  // Angular momentum points well away from the space 3-axis, keeping
  // theta(t) inside (0.4, pi - 0.4) over the test horizons.
  d.default_initial.t = 0.0;
  d.default_initial.x = (VectorXd(3) << 0.3, 1.3, 0.6).finished();
  d.default_initial.eta_i = (VectorXd(3) << 0.35, -0.2, 0.5).finished();
  return d;
}

ModelDescriptor build_knife_edge(
    const std::map<std::string, double>& overrides) {
  const auto p = merge_params({{"a", 0.4}, {"mass", 1.0}, {"stiffness", 1.0}},
                              overrides);
  const double a = param(p, "a");
  const double mass = param(p, "mass");
  const double k = param(p, "stiffness");
  if (mass <= 0.0) throw InvalidParameter("mass must be positive");
  if (k < 0.0) throw InvalidParameter("stiffness must be non-negative");

  ModelDescriptor d;
  d.name = "knife_edge";
  d.n = 3;
  d.m = 2;
  d.parameters = p;
  d.reference = OracleKind::dae_multiplier;
  d.summary =
      "blade-coupled particle, linear constraint eta_3 = a eta_1, "
      "harmonic well on x_1, x_2";

  ConstraintSet cs;
  cs.m = 2;
  cs.n = 3;
  cs.phi = [a](const VectorXd& eta_i, const VectorXd&, double) {
    return VectorXd::Constant(1, a * eta_i[0]);
  };
  cs.dphi_deta = [a](const VectorXd&, const VectorXd&, double) {
    MatrixXd out(1, 2);
    out << a, 0.0;
    return out;
  };
  cs.dphi_dx = [](const VectorXd&, const VectorXd&, double) {
    return MatrixXd::Zero(1, 3);
  };
  cs.dphi_dt = [](const VectorXd&, const VectorXd&, double) {
    return VectorXd::Zero(1);
  };
  cs.d2phi_eta_eta = [](const VectorXd&, const VectorXd&, double) {
    return std::vector<MatrixXd>{MatrixXd::Zero(2, 2)};
  };
  cs.d2phi_x_eta = [](const VectorXd&, const VectorXd&, double) {
    return std::vector<MatrixXd>{MatrixXd::Zero(3, 2)};
  };
  cs.d2phi_t_eta = [](const VectorXd&, const VectorXd&, double) {
    return MatrixXd::Zero(1, 2);
  };

  // The well leaves x_3 cyclic, so the reduced (x_1, x_2, y*) flow is
  // self-contained.
  d.model.L = [mass, k](const VectorXd& eta, const VectorXd& x, double) {
    return 0.5 * mass * eta.squaredNorm() -
           0.5 * k * (x[0] * x[0] + x[1] * x[1]);
  };
  d.model.dL_deta = [mass](const VectorXd& eta, const VectorXd&, double) {
    return (mass * eta).eval();
  };
  d.model.frame = cartesian_frame(3);
  d.model.constraints = cs;
  d.model.conservative = true;

  d.default_initial.t = 0.0;
  d.default_initial.x = (VectorXd(3) << 0.6, -0.3, 0.2).finished();
  d.default_initial.eta_i = (VectorXd(2) << 0.2, 0.8).finished();
  return d;
}

ModelDescriptor build_quadratic_particle(
    const std::map<std::string, double>& overrides) {
  const auto p = merge_params({{"a", 1.0}, {"stiffness", 1.0}}, overrides);
  const double a = param(p, "a");
  const double k = param(p, "stiffness");
  if (a == 0.0) throw InvalidParameter("constraint scale a must be nonzero");
  if (k < 0.0) throw InvalidParameter("stiffness must be non-negative");

  ModelDescriptor d;
  d.name = "quadratic_constraint_particle";
  d.n = 3;
  d.m = 2;
  d.parameters = p;
  d.reference = OracleKind::none;
  d.summary =
      "particle with the genuinely nonlinear constraint "
      "eta_3 = (eta_1^2 + eta_2^2)/(2a) in a harmonic well";

  ConstraintSet cs;
  cs.m = 2;
  cs.n = 3;
  cs.phi = [a](const VectorXd& eta_i, const VectorXd&, double) {
    return VectorXd::Constant(
        1, (eta_i[0] * eta_i[0] + eta_i[1] * eta_i[1]) / (2.0 * a));
  };
  cs.dphi_deta = [a](const VectorXd& eta_i, const VectorXd&, double) {
    MatrixXd out(1, 2);
    out << eta_i[0] / a, eta_i[1] / a;
    return out;
  };
  cs.dphi_dx = [](const VectorXd&, const VectorXd&, double) {
    return MatrixXd::Zero(1, 3);
  };
  cs.dphi_dt = [](const VectorXd&, const VectorXd&, double) {
    return VectorXd::Zero(1);
  };
  cs.d2phi_eta_eta = [a](const VectorXd&, const VectorXd&, double) {
    return std::vector<MatrixXd>{MatrixXd::Identity(2, 2) / a};
  };
  cs.d2phi_x_eta = [](const VectorXd&, const VectorXd&, double) {
    return std::vector<MatrixXd>{MatrixXd::Zero(3, 2)};
  };
  cs.d2phi_t_eta = [](const VectorXd&, const VectorXd&, double) {
    return MatrixXd::Zero(1, 2);
  };

  d.model.L = [k](const VectorXd& eta, const VectorXd& x, double) {
    return 0.5 * eta.squaredNorm() - 0.5 * k * x.squaredNorm();
  };
  d.model.dL_deta = [](const VectorXd& eta, const VectorXd&, double) {
    return eta;
  };
  d.model.frame = cartesian_frame(3);
  d.model.constraints = cs;
  d.model.conservative = true;

  d.default_initial.t = 0.0;
  d.default_initial.x = (VectorXd(3) << 0.3, -0.2, 0.1).finished();
  d.default_initial.eta_i = (VectorXd(2) << 0.8, 0.4).finished();
  return d;
}

void self_check(const ModelDescriptor& d) {
  const LagrangeState& s = d.default_initial;
  // Frame invertibility on a small grid around the default state.
  for (int k = -1; k <= 1; ++k) {
    const VectorXd x =
        s.x + 0.05 * k * VectorXd::Ones(d.n);
    d.model.frame.zeta(x, s.t);
  }
  if (d.model.constraints) {
    const VectorXd eta = complete_eta(*d.model.constraints, s.eta_i, s.x, s.t);
    if (admissibility_residual(*d.model.constraints, eta, s.x, s.t) != 0.0)
      throw Error("descriptor self-check: completion not admissible");
  }
  const Eigen::MatrixXd hess = reduced_hessian(d.model, s.eta_i, s.x, s.t);
  if (numdiff::rcond(hess) < d.model.rcond_min)
    throw Error("descriptor self-check: reduced Hessian singular at the "
                "default state");
}

}  // namespace

std::vector<std::string> model_names() {
  return {"harmonic_oscillator", "free_rigid_body", "knife_edge",
          "quadratic_constraint_particle"};
}

ModelDescriptor get_model(const std::string& name,
                          const std::map<std::string, double>& overrides) {
  ModelDescriptor d;
  if (name == "harmonic_oscillator") {
    d = build_harmonic_oscillator(overrides);
  } else if (name == "free_rigid_body") {
    d = build_free_rigid_body(overrides);
  } else if (name == "knife_edge") {
    d = build_knife_edge(overrides);
  } else if (name == "quadratic_constraint_particle") {
    d = build_quadratic_particle(overrides);
  } else {
    throw UnknownModel("unknown model '" + name + "'");
  }
  self_check(d);
  return d;
}

Trajectory oracle_trajectory(const ModelDescriptor& desc,
                             const LagrangeState& initial, double horizon,
                             const IntegratorConfig& cfg) {
  const double t1 = initial.t + horizon;

  if (desc.reference == OracleKind::closed_form) {
    // Sampled analytic solution of the oscillator.
    const double w =
        std::sqrt(desc.parameters.at("stiffness") / desc.parameters.at("mass"));
    const double x0 = initial.x[0];
    const double v0 = initial.eta_i[0];
    Trajectory traj;
    std::vector<double> times{initial.t};
    if (cfg.sample_interval > 0.0) {
      for (double tk = initial.t + cfg.sample_interval; tk < t1 - 1e-12;
           tk += cfg.sample_interval)
        times.push_back(tk);
    }
    times.push_back(t1);
    for (double tk : times) {
      const double dt = tk - initial.t;
      Eigen::VectorXd y(2);
      y << x0 * std::cos(w * dt) + (v0 / w) * std::sin(w * dt),
          -x0 * w * std::sin(w * dt) + v0 * std::cos(w * dt);
      traj.times.push_back(tk);
      traj.states.push_back(y);
    }
    return traj;
  }

  if (desc.reference == OracleKind::euler_equations) {
    const double i1 = desc.parameters.at("I1");
    const double i2 = desc.parameters.at("I2");
    const double i3 = desc.parameters.at("I3");
    // Direct Euler equations plus 3-1-3 angle reconstruction, written
    // without the frame machinery.
    Rhs rhs = [i1, i2, i3](double, const Eigen::VectorXd& z) {
      const double th = z[1], ps = z[2];
      const double w1 = z[3], w2 = z[4], w3 = z[5];
      const double st = std::sin(th);
      if (std::abs(st) < 1e-8)
        throw Error("euler-angle oracle hit the coordinate singularity");
      const double sp = std::sin(ps), cp = std::cos(ps);
      Eigen::VectorXd dz(6);
      const double precession = (w1 * sp + w2 * cp) / st;
      dz[0] = precession;
      dz[1] = w1 * cp - w2 * sp;
      dz[2] = w3 - std::cos(th) * precession;
      dz[3] = (i2 - i3) / i1 * w2 * w3;
      dz[4] = (i3 - i1) / i2 * w3 * w1;
      dz[5] = (i1 - i2) / i3 * w1 * w2;
      return dz;
    };
    Eigen::VectorXd z0(6);
    z0 << initial.x, initial.eta_i;
    return integrate(rhs, z0, initial.t, t1, cfg);
  }

  if (desc.reference == OracleKind::dae_multiplier) {
    const double a = desc.parameters.at("a");
    const double mass = desc.parameters.at("mass");
    const double k = desc.parameters.at("stiffness");
    const double alpha = 10.0;  // Baumgarte gain on the velocity constraint
    // Index-reduced multiplier formulation in (x, xdot) with the Chetaev
    // force lambda * df/deta = lambda * (-a, 0, 1).
    Rhs rhs = [a, mass, k, alpha](double, const Eigen::VectorXd& z) {
      const double v1 = z[3], v3 = z[5];
      const double f = v3 - a * v1;
      const double lambda =
          (-alpha * f * mass - a * k * z[0]) / (1.0 + a * a);
      Eigen::VectorXd dz(6);
      dz[0] = v1;
      dz[1] = z[4];
      dz[2] = v3;
      dz[3] = (-k * z[0] - a * lambda) / mass;
      dz[4] = -k * z[1] / mass;
      dz[5] = lambda / mass;
      return dz;
    };
    Eigen::VectorXd z0(6);
    const Eigen::VectorXd eta =
        complete_eta(*desc.model.constraints, initial.eta_i, initial.x,
                     initial.t);
    z0 << initial.x, eta;
    Trajectory raw = integrate(rhs, z0, initial.t, t1, cfg);
    // Re-emit as [x; eta_i].
    Trajectory out;
    out.times = raw.times;
    out.steps = raw.steps;
    out.rejected = raw.rejected;
    out.rhs_evals = raw.rhs_evals;
    for (const auto& z : raw.states) {
      Eigen::VectorXd y(5);
      y << z.head(3), z.segment(3, 2);
      out.states.push_back(y);
    }
    return out;
  }

  throw OracleUnavailable("model '" + desc.name + "' ships no oracle");
}

}  // namespace nhmech
