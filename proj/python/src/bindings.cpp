#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nhmech/errors.hpp"
#include "nhmech/scenario.hpp"

namespace py = pybind11;

namespace {

using nhmech::ModelDescriptor;

py::dict descriptor_info(const ModelDescriptor& desc) {
  py::dict info;
  info["name"] = desc.name;
  info["n"] = desc.n;
  info["m"] = desc.m;
  info["constrained"] = static_cast<bool>(desc.model.constraints);
  info["parameters"] = desc.parameters;
  info["summary"] = desc.summary;
  return info;
}

nhmech::IntegratorConfig make_cfg(const std::string& method, double dt,
                                  double rtol, double atol,
                                  double sample_interval) {
  nhmech::IntegratorConfig cfg;
  if (method == "rk4") {
    cfg.method = nhmech::Method::rk4;
  } else if (method == "rk45") {
    cfg.method = nhmech::Method::rk45;
  } else {
    throw nhmech::ConfigError("method must be 'rk4' or 'rk45'");
  }
  cfg.dt = dt;
  cfg.rtol = rtol;
  cfg.atol = atol;
  cfg.sample_interval = sample_interval;
  return cfg;
}

/// Thin wrapper keeping the descriptor plus simulation helpers.
struct Model {
  ModelDescriptor desc;

  explicit Model(const std::string& name,
                 const std::map<std::string, double>& parameters)
      : desc(nhmech::get_model(name, parameters)) {}

  py::dict simulate(double horizon, py::object x0, py::object eta0, double t0,
                    const std::string& method, double dt, double rtol,
                    double atol, double sample_interval) const {
    nhmech::ScenarioConfig cfg;
    cfg.model_name = desc.name;
    cfg.horizon = horizon;
    cfg.integrator = make_cfg(method, dt, rtol, atol, sample_interval);
    if (!x0.is_none() || !eta0.is_none()) {
      if (x0.is_none() || eta0.is_none())
        throw nhmech::ConfigError("give both x0 and eta0, or neither");
      cfg.has_initial = true;
      cfg.t0 = t0;
      cfg.x0 = x0.cast<Eigen::VectorXd>();
      cfg.v0 = eta0.cast<Eigen::VectorXd>();
    }
    const nhmech::SimulationSeries series =
        nhmech::simulate_series(cfg, desc);

    const auto rows = static_cast<Eigen::Index>(series.rows.size());
    Eigen::VectorXd t(rows);
    Eigen::MatrixXd x(rows, desc.n), eta(rows, desc.m), ystar(rows, desc.m);
    Eigen::VectorXd hstar(rows);
    Eigen::MatrixXd residual(rows, desc.n - desc.m);
    for (Eigen::Index k = 0; k < rows; ++k) {
      const nhmech::SimulationRow& row = series.rows[k];
      t[k] = row.t;
      x.row(k) = row.x;
      eta.row(k) = row.eta_i;
      ystar.row(k) = row.ystar;
      hstar[k] = row.hstar;
      residual.row(k) = row.residual;
    }
    py::dict out;
    out["t"] = t;
    out["x"] = x;
    out["eta"] = eta;
    out["ystar"] = ystar;
    out["Hstar"] = hstar;
    out["constraint_residual"] = residual;
    out["steps"] = series.steps;
    out["rhs_evaluations"] = series.rhs_evals;
    return out;
  }

  Eigen::VectorXd eta_from_velocity(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& xdot,
                                    double t) const {
    return desc.model.frame.eta_from_velocity(x, xdot, t);
  }
  Eigen::VectorXd velocity_from_eta(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& eta,
                                    double t) const {
    return desc.model.frame.velocity_from_eta(x, eta, t);
  }
  py::tuple structure_coefficients(const Eigen::VectorXd& x, double t) const {
    const nhmech::StructureResult r =
        desc.model.frame.structure_coefficients(x, t);
    return py::make_tuple(r.coeffs.c0, r.coeffs.c);
  }
  Eigen::VectorXd reduced_momenta(const Eigen::VectorXd& eta_i,
                                  const Eigen::VectorXd& x, double t) const {
    return nhmech::reduced_momenta(desc.model, eta_i, x, t);
  }
  double reduced_lagrangian(const Eigen::VectorXd& eta_i,
                            const Eigen::VectorXd& x, double t) const {
    return nhmech::reduced_lagrangian(desc.model, eta_i, x, t);
  }
  Eigen::VectorXd legendre_invert(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& ystar,
                                  double t) const {
    return nhmech::legendre_invert(desc.model, x, ystar, t);
  }
  double hamiltonian(const Eigen::VectorXd& x, const Eigen::VectorXd& ystar,
                     double t) const {
    return nhmech::hamiltonian_reduced(desc.model, x, ystar, t);
  }

  py::dict invariant_drift(const Eigen::VectorXd& radii_x,
                           const Eigen::VectorXd& radii_ystar, int samples,
                           double horizon, int slide_count,
                           const std::vector<std::string>& tau_shapes,
                           double rtol) const {
    nhmech::ScenarioConfig cfg;
    cfg.loop.present = true;
    cfg.loop.radii_x = radii_x;
    cfg.loop.radii_ystar = radii_ystar;
    cfg.loop.samples = samples;
    const nhmech::LoopSpec loop = nhmech::scenario_loop(cfg, desc);

    std::vector<nhmech::TauShape> shapes;
    for (const std::string& label : tau_shapes)
      shapes.push_back(nhmech::make_tau_shape(label));
    std::vector<double> slides;
    for (int k = 0; k <= slide_count; ++k)
      slides.push_back(horizon * k / slide_count);

    nhmech::IntegratorConfig icfg;
    icfg.rtol = rtol;
    icfg.atol = rtol * 1e-2;
    const nhmech::DriftReport report =
        nhmech::drift_report(loop, desc.model, icfg, shapes, slides);

    py::dict out;
    out["base_value"] = report.base_value;
    out["max_rel_drift"] = report.max_rel_drift;
    if (report.has_linear_drift)
      out["max_linear_drift"] = report.max_linear_drift;
    py::list entries;
    for (const auto& entry : report.entries) {
      py::dict e;
      e["tau"] = entry.tau_label;
      e["slide"] = entry.slide;
      e["I"] = entry.value;
      if (entry.has_linear) e["I1"] = entry.linear;
      e["rel_drift"] = entry.rel_drift;
      entries.append(e);
    }
    out["slices"] = entries;
    out["failures"] = report.failures;
    return out;
  }
};

py::list list_models() {
  py::list out;
  for (const std::string& name : nhmech::model_names())
    out.append(descriptor_info(nhmech::get_model(name)));
  return out;
}

py::dict run_checks(const std::string& model, bool break_astar) {
  const nhmech::CheckReport report = nhmech::run_check(model, break_astar);
  py::dict out;
  out["all_pass"] = report.all_pass;
  py::list items;
  for (const auto& item : report.items) {
    py::dict entry;
    entry["model"] = item.model;
    entry["check"] = item.name;
    entry["value"] = item.value;
    entry["threshold"] = item.threshold;
    entry["pass"] = item.pass;
    entry["note"] = item.note;
    items.append(entry);
  }
  out["checks"] = items;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multiplier-free nonholonomic dynamics in group frames, with "
            "Poincare-Cartan loop-invariant verification";

  py::register_exception<nhmech::Error>(m, "NhmechError");

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&, const std::map<std::string, double>&>(),
           py::arg("name"), py::arg("parameters") = std::map<std::string, double>{})
      .def_property_readonly("name", [](const Model& mm) { return mm.desc.name; })
      .def_property_readonly("n", [](const Model& mm) { return mm.desc.n; })
      .def_property_readonly("m", [](const Model& mm) { return mm.desc.m; })
      .def_property_readonly("info",
                             [](const Model& mm) { return descriptor_info(mm.desc); })
      .def("simulate", &Model::simulate, py::arg("horizon"),
           py::arg("x0") = py::none(), py::arg("eta0") = py::none(),
           py::arg("t0") = 0.0, py::arg("method") = "rk45",
           py::arg("dt") = 1e-2, py::arg("rtol") = 1e-10,
           py::arg("atol") = 1e-12, py::arg("sample_interval") = 0.01)
      .def("eta_from_velocity", &Model::eta_from_velocity, py::arg("x"),
           py::arg("xdot"), py::arg("t") = 0.0)
      .def("velocity_from_eta", &Model::velocity_from_eta, py::arg("x"),
           py::arg("eta"), py::arg("t") = 0.0)
      .def("structure_coefficients", &Model::structure_coefficients,
           py::arg("x"), py::arg("t") = 0.0)
      .def("reduced_momenta", &Model::reduced_momenta, py::arg("eta_i"),
           py::arg("x"), py::arg("t") = 0.0)
      .def("reduced_lagrangian", &Model::reduced_lagrangian, py::arg("eta_i"),
           py::arg("x"), py::arg("t") = 0.0)
      .def("legendre_invert", &Model::legendre_invert, py::arg("x"),
           py::arg("ystar"), py::arg("t") = 0.0)
      .def("hamiltonian", &Model::hamiltonian, py::arg("x"), py::arg("ystar"),
           py::arg("t") = 0.0)
      .def("invariant_drift", &Model::invariant_drift, py::arg("radii_x"),
           py::arg("radii_ystar"), py::arg("samples") = 128,
           py::arg("horizon") = 2.0, py::arg("slide_count") = 4,
           py::arg("tau_shapes") = std::vector<std::string>{"const"},
           py::arg("rtol") = 1e-9);

  m.attr("__version__") = "0.1.0";
  m.def("list_models", &list_models, "Registry with dimensions and oracles");
  m.def("run_checks", &run_checks, py::arg("model") = "",
        py::arg("break_astar") = false,
        "Cross-module identity suite; returns the per-check table");
}
