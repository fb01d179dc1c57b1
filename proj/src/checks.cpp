#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>

#include "nhmech/errors.hpp"
#include "nhmech/numdiff.hpp"
#include "nhmech/scenario.hpp"

namespace nhmech {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Deterministic xorshift draws in [-1, 1]; no global state.
struct Rng {
  std::uint64_t s = 0x9e3779b97f4a7c15ull;
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

Rhs lagrange_flat_rhs(const LagrangianModel& model) {
  const int n = model.n();
  const int m = model.m();
  return [&model, n, m](double t, const VectorXd& z) {
    const LagrangeRhs r =
        eom_rhs_lagrange(model, LagrangeState{t, z.head(n), z.tail(m)});
    VectorXd dz(n + m);
    dz << r.xdot, r.eta_dot;
    return dz;
  };
}

Rhs hamilton_flat_rhs(const LagrangianModel& model,
                      std::shared_ptr<VectorXd> guess) {
  const int n = model.n();
  const int m = model.m();
  return [&model, n, m, guess](double t, const VectorXd& z) {
    const HamiltonRhs r =
        eom_rhs_hamilton(model, PhaseState{t, z.head(n), z.tail(m)}, *guess);
    *guess = r.eta_i;
    VectorXd dz(n + m);
    dz << r.xdot, r.ystar_dot;
    return dz;
  };
}

IntegratorConfig tight_cfg(double rtol = 1e-10, double interval = 0.5) {
  IntegratorConfig cfg;
  cfg.method = Method::rk45;
  cfg.rtol = rtol;
  cfg.atol = rtol * 1e-2;
  cfg.sample_interval = interval;
  return cfg;
}

struct Suite {
  const ModelDescriptor& desc;
  CheckReport& report;

  void add(const std::string& name, double value, double threshold, bool pass,
           const std::string& note = "") {
    report.items.push_back({desc.name, name, value, threshold, pass, note});
    report.all_pass = report.all_pass && pass;
  }
  void add_max(const std::string& name, double value, double threshold,
               const std::string& note = "") {
    add(name, value, threshold, value <= threshold, note);
  }
};

void check_frame_identities(Suite& s) {
  const ModelDescriptor& d = s.desc;
  const GroupFrame& frame = d.model.frame;
  Rng rng;
  double max_antisym = 0.0;
  double max_zeta = 0.0;
  double max_round = 0.0;
  double max_supplier = 0.0;
  bool supplier_ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd x =
        d.default_initial.x + rng.vec(d.n, 0.1);
    const double t = 0.3 * rng.next();

    const StructureCoefficients sc =
        frame.structure_from_commutators(x, t).coeffs;
    for (int r = 0; r < d.n; ++r)
      max_antisym = std::max(
          max_antisym, (sc.c[r] + sc.c[r].transpose()).cwiseAbs().maxCoeff());

    const MatrixXd xi = frame.xi_at(x, t);
    max_zeta = std::max(max_zeta,
                        (frame.zeta(x, t) * xi -
                         MatrixXd::Identity(d.n + 1, d.n + 1))
                            .cwiseAbs()
                            .maxCoeff());

    const VectorXd xdot = rng.vec(d.n);
    const VectorXd eta = frame.eta_from_velocity(x, xdot, t);
    max_round = std::max(
        max_round,
        (frame.velocity_from_eta(x, eta, t) - xdot).cwiseAbs().maxCoeff());

    if (frame.has_structure()) {
      try {
        max_supplier = std::max(
            max_supplier,
            frame.structure_coefficients(x, t, true, 1e-6).solve_residual);
      } catch (const FrameInconsistency&) {
        supplier_ok = false;
      }
    }
  }
  s.add_max("structure_antisymmetry", max_antisym, 1e-12);
  s.add_max("zeta_xi_identity", max_zeta, 1e-12);
  s.add_max("frame_round_trip", max_round, 1e-10);
  if (frame.has_structure())
    s.add("structure_supplier_agreement", max_supplier, 1e-6,
          supplier_ok && max_supplier <= 1e-6);
}

void check_transposition(Suite& s) {
  const ModelDescriptor& d = s.desc;
  const int n = d.n;
  const VectorXd x0 = d.default_initial.x;

  TrajectorySegment segment;
  segment.t0 = 0.0;
  segment.t1 = 1.5;
  segment.x = [x0, n](double t) {
    VectorXd x = x0;
    for (int q = 0; q < n; ++q)
      x[q] += 0.15 * std::sin((0.9 + 0.3 * q) * t + 0.2 * q);
    return x;
  };
  segment.xdot = [n](double t) {
    VectorXd v(n);
    for (int q = 0; q < n; ++q)
      v[q] = 0.15 * (0.9 + 0.3 * q) * std::cos((0.9 + 0.3 * q) * t + 0.2 * q);
    return v;
  };
  VariationProbe probe;
  probe.omega = [n](double t) {
    VectorXd w(n);
    for (int p = 0; p < n; ++p)
      w[p] = 0.1 + 0.05 * p + 0.08 * t + 0.03 * t * t;
    return w;
  };
  probe.Omega0 = [](double t) { return 0.1 + 0.06 * t; };
  PhaseFunction f = [](const VectorXd& eta, const VectorXd& x, double t) {
    return 0.5 * eta.squaredNorm() + 0.3 * x[0] + 0.05 * t * t;
  };

  const double eps = 1e-3;
  const TranspositionReport r1 =
      verify_transposition(d.model.frame, segment, probe, f, eps);
  const TranspositionReport r2 =
      verify_transposition(d.model.frame, segment, probe, f, eps / 2);

  const double floor = 1e-9;
  bool pass = true;
  std::ostringstream note;
  const double devs1[] = {r1.dev_sync, r1.dev_async, r1.dev_functional};
  const double devs2[] = {r2.dev_sync, r2.dev_async, r2.dev_functional};
  const char* tags[] = {"sync", "async", "functional"};
  for (int i = 0; i < 3; ++i) {
    if (devs2[i] < floor) {
      note << tags[i] << "=exact ";
      continue;
    }
    const double ratio = devs1[i] / devs2[i];
    note << tags[i] << "=" << ratio << " ";
    if (ratio < 1.7 || ratio > 2.3) pass = false;
  }
  s.add("transposition_first_order",
        std::max({r1.dev_sync, r1.dev_async, r1.dev_functional}), 0.0, pass,
        note.str());
}

void check_constraints(Suite& s) {
  const ModelDescriptor& d = s.desc;
  if (!d.model.constraints) return;
  const ConstraintSet& cs = *d.model.constraints;
  Rng rng;
  double max_chetaev = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd x = d.default_initial.x + rng.vec(d.n, 0.1);
    const VectorXd eta_i = d.default_initial.eta_i + rng.vec(d.m, 0.3);
    const VectorXd omega_i = rng.vec(d.m);
    const double t = 0.2 * rng.next();
    const VectorXd omega = admissible_omega(cs, omega_i, eta_i, x, t);
    // Chetaev contraction through the f-gradient of the solved form.
    const MatrixXd dphi = cs.dphi_deta_at(eta_i, x, t);
    for (int a = 0; a < d.n - d.m; ++a) {
      double contraction = omega[d.m + a];
      for (int i = 0; i < d.m; ++i) contraction -= dphi(a, i) * omega_i[i];
      max_chetaev = std::max(max_chetaev, std::abs(contraction));
    }
  }
  s.add_max("chetaev_residual", max_chetaev, 1e-14);
}

void check_legendre(Suite& s) {
  const ModelDescriptor& d = s.desc;
  Rng rng;
  double max_round = 0.0;
  double max_dual = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd x = d.default_initial.x + rng.vec(d.n, 0.1);
    const VectorXd eta_i = d.default_initial.eta_i + rng.vec(d.m, 0.3);
    const double t = 0.2 * rng.next();
    const VectorXd ystar = reduced_momenta(d.model, eta_i, x, t);
    const VectorXd back = legendre_invert(d.model, x, ystar, t);
    max_round = std::max(max_round, (back - eta_i).cwiseAbs().maxCoeff());

    if (trial < 3) {
      for (int j = 0; j < d.m; ++j) {
        const double h = numdiff::step(ystar[j]);
        VectorXd yp = ystar, ym = ystar;
        yp[j] += h;
        ym[j] -= h;
        const double dh = (hamiltonian_reduced(d.model, x, yp, t) -
                           hamiltonian_reduced(d.model, x, ym, t)) /
                          (2.0 * h);
        max_dual = std::max(max_dual, std::abs(dh - back[j]));
      }
    }
  }
  s.add_max("legendre_round_trip", max_round, 1e-10);
  s.add_max("hamiltonian_duality", max_dual, 1e-6);
}

void check_dynamics(Suite& s) {
  const ModelDescriptor& d = s.desc;
  const LagrangianModel& model = d.model;
  const LagrangeState& init = d.default_initial;
  const IntegratorConfig cfg = tight_cfg(1e-10, 0.25);

  VectorXd z0(d.n + d.m);
  z0 << init.x, init.eta_i;
  const Trajectory lagr =
      integrate(lagrange_flat_rhs(model), z0, init.t, init.t + 5.0, cfg);

  // d'Alembert residual along the trajectory, for a basis of admissible
  // virtual displacements.
  double max_dalembert = 0.0;
  for (std::size_t k = 0; k < lagr.times.size(); k += 4) {
    const LagrangeState st{lagr.times[k], lagr.states[k].head(d.n),
                           lagr.states[k].tail(d.m)};
    const LagrangeRhs rhs = eom_rhs_lagrange(model, st);
    const VectorXd ystar = reduced_momenta(model, st.eta_i, st.x, st.t);
    const double scale = 1.0 + ystar.cwiseAbs().maxCoeff() +
                         rhs.eta_dot.cwiseAbs().maxCoeff();
    for (int j = 0; j < d.m; ++j) {
      const VectorXd omega_i = VectorXd::Unit(d.m, j);
      const double res =
          dalembert_residual(model, st, rhs.eta_dot, omega_i);
      max_dalembert = std::max(max_dalembert, std::abs(res) / scale);
    }
  }
  s.add_max("dalembert_residual", max_dalembert, 1e-8);

  // Hamilton-side trajectory from the matched initial condition.
  const VectorXd y0 = reduced_momenta(model, init.eta_i, init.x, init.t);
  VectorXd zh0(d.n + d.m);
  zh0 << init.x, y0;
  auto guess = std::make_shared<VectorXd>(init.eta_i);
  const Trajectory ham = integrate(hamilton_flat_rhs(model, guess), zh0,
                                   init.t, init.t + 5.0, cfg);
  double max_dev = 0.0;
  VectorXd inv_guess = init.eta_i;
  for (std::size_t k = 0; k < lagr.times.size(); ++k) {
    const VectorXd xl = lagr.states[k].head(d.n);
    const VectorXd xh = ham.states[k].head(d.n);
    max_dev = std::max(max_dev, (xl - xh).cwiseAbs().maxCoeff());
    const VectorXd eta_h = legendre_invert(
        model, xh, ham.states[k].tail(d.m), ham.times[k], inv_guess);
    inv_guess = eta_h;
    max_dev = std::max(
        max_dev, (lagr.states[k].tail(d.m) - eta_h).cwiseAbs().maxCoeff());
  }
  s.add_max("formulation_agreement", max_dev, 1e-7);

  // Energy along the trajectory (asserted only where H* is conserved:
  // no constraints, or phi homogeneous of degree one in eta).
  double h0 = 0.0, max_h_drift = 0.0;
  for (std::size_t k = 0; k < lagr.times.size(); ++k) {
    const VectorXd eta_i = lagr.states[k].tail(d.m);
    const VectorXd x = lagr.states[k].head(d.n);
    const VectorXd ystar = reduced_momenta(model, eta_i, x, lagr.times[k]);
    const double h = eta_i.dot(ystar) -
                     reduced_lagrangian(model, eta_i, x, lagr.times[k]);
    if (k == 0) h0 = h;
    max_h_drift = std::max(max_h_drift, std::abs(h - h0));
  }
  const bool homogeneous = d.name != "quadratic_constraint_particle";
  if (model.conservative && homogeneous) {
    s.add_max("energy_drift", max_h_drift, 1e-8);
  } else {
    s.add("energy_drift", max_h_drift, 0.0, true, "reported only");
  }

  if (d.name == "free_rigid_body") {
    // Casimir: the body angular momentum norm.
    const double i1 = d.parameters.at("I1");
    const double i2 = d.parameters.at("I2");
    const double i3 = d.parameters.at("I3");
    auto casimir = [&](const VectorXd& eta) {
      return std::sqrt(std::pow(i1 * eta[0], 2) + std::pow(i2 * eta[1], 2) +
                       std::pow(i3 * eta[2], 2));
    };
    const double c0 = casimir(init.eta_i);
    double drift = 0.0;
    for (const auto& z : lagr.states)
      drift = std::max(drift, std::abs(casimir(z.tail(3)) - c0));
    s.add_max("momentum_norm_drift", drift, 1e-8);
  }

  if (d.reference != OracleKind::none) {
    const Trajectory oracle = oracle_trajectory(d, init, 5.0, cfg);
    double dev = 0.0;
    for (std::size_t k = 0; k < lagr.times.size(); ++k)
      dev = std::max(dev,
                     (lagr.states[k] - oracle.states[k]).cwiseAbs().maxCoeff());
    const double tol = d.reference == OracleKind::dae_multiplier ? 1e-6 : 1e-8;
    s.add_max("oracle_agreement", dev, tol);
  }

  if (model.constraints) {
    // Transported dependent block: residual measures integrator drift
    // off the constraint manifold.
    const ConstraintSet& cs = *model.constraints;
    const int na = d.n - d.m;
    VectorXd za(d.n + d.m + na);
    za << init.x, init.eta_i, cs.phi_at(init.eta_i, init.x, init.t);
    Rhs rhs = [&model, &cs, &d](double t, const VectorXd& z) {
      const LagrangeState st{t, z.head(d.n), z.segment(d.n, d.m)};
      const LagrangeRhs r = eom_rhs_lagrange(model, st);
      VectorXd dz(z.size());
      dz.head(d.n) = r.xdot;
      dz.segment(d.n, d.m) = r.eta_dot;
      dz.tail(d.n - d.m) = cs.dphi_dt_at(st.eta_i, st.x, t) +
                           cs.dphi_dx_at(st.eta_i, st.x, t) * r.xdot +
                           cs.dphi_deta_at(st.eta_i, st.x, t) * r.eta_dot;
      return dz;
    };
    const Trajectory aug = integrate(rhs, za, init.t, init.t + 5.0, cfg);
    double max_residual = 0.0;
    for (std::size_t k = 0; k < aug.times.size(); ++k) {
      const VectorXd phi = cs.phi_at(aug.states[k].segment(d.n, d.m),
                                     aug.states[k].head(d.n), aug.times[k]);
      max_residual = std::max(
          max_residual,
          (aug.states[k].tail(na) - phi).cwiseAbs().maxCoeff());
    }
    s.add_max("constraint_residual", max_residual, 1e-8);
  }
}

void check_invariant_spot(Suite& s) {
  const ModelDescriptor& d = s.desc;
  if (!d.model.constraints) return;
  const LagrangeState& init = d.default_initial;
  const VectorXd y0 = reduced_momenta(d.model, init.eta_i, init.x, init.t);

  LoopSpec loop;
  loop.N = 64;
  const VectorXd cx = init.x;
  loop.base = [cx, y0, &init](double sv) {
    PhaseState p;
    p.t = init.t;
    p.x = cx;
    p.ystar = y0;
    p.x[0] += 0.1 * std::cos(2.0 * M_PI * sv);
    p.ystar[0] += 0.1 * std::sin(2.0 * M_PI * sv);
    return p;
  };

  std::vector<TauShape> shapes = {make_tau_shape("const"),
                                  make_tau_shape("sin")};
  const IntegratorConfig cfg = tight_cfg(1e-9, 0.5);
  DriftOptions options;
  options.sample_counts = {64};
  options.scheme = TangentScheme::fft;
  const DriftReport report =
      drift_report(loop, d.model, cfg, shapes, {0.0, 0.5, 1.0}, options);
  // Invariance is exact only where the A*-term vanishes identically
  // (linear constant-coefficient constraints). For the genuinely
  // nonlinear benchmark the flow itself drifts, so the value is
  // reported without a threshold.
  const bool assertable = d.name == "knife_edge";
  const bool pass = report.failures.empty() &&
                    (!assertable || report.max_rel_drift <= 1e-6);
  s.add("invariant_drift_spot", report.max_rel_drift,
        assertable ? 1e-6 : 0.0, pass,
        assertable ? "" : "reported only");
}

}  // namespace

CheckReport run_check(const std::string& model_filter, bool break_astar) {
  CheckReport report;
  bool matched = false;
  for (const std::string& name : model_names()) {
    if (!model_filter.empty() && name != model_filter) continue;
    matched = true;
    ModelDescriptor desc = get_model(name);
    desc.model.break_astar = break_astar;
    Suite suite{desc, report};
    try {
      check_frame_identities(suite);
      check_transposition(suite);
      check_constraints(suite);
      check_legendre(suite);
      check_dynamics(suite);
      check_invariant_spot(suite);
    } catch (const Error& e) {
      report.items.push_back(
          {name, "suite_error", 0.0, 0.0, false, e.what()});
      report.all_pass = false;
    }
  }
  if (!matched)
    throw UnknownModel("no model matches filter '" + model_filter + "'");
  return report;
}

}  // namespace nhmech
