#include "nhmech/scenario.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nhmech/errors.hpp"
#include "nhmech/numdiff.hpp"

namespace nhmech {

namespace {

using nlohmann::json;
using Eigen::VectorXd;

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + context);
}

VectorXd to_vector(const json& j, const std::string& context) {
  if (!j.is_array()) throw ConfigError(context + " must be an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(context + " must be numeric");
    v[i] = j[i].get<double>();
  }
  return v;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

/// Shortest round-trip decimal representation.
std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
}

}  // namespace

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ScenarioConfig ScenarioConfig::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  require_keys(j,
               {"schema_version", "model", "initial", "integrator", "horizon",
                "loop", "outputs"},
               "config");
  ScenarioConfig cfg;
  cfg.config_hash = fnv1a_hex(text);

  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    throw ConfigError("schema_version (integer) is required");
  cfg.schema_version = j["schema_version"].get<int>();
  if (cfg.schema_version != 1)
    throw ConfigError("unsupported schema_version " +
                      std::to_string(cfg.schema_version));

  if (!j.contains("model")) throw ConfigError("model section is required");
  require_keys(j["model"], {"name", "parameters"}, "model");
  if (!j["model"].contains("name") || !j["model"]["name"].is_string())
    throw ConfigError("model.name (string) is required");
  cfg.model_name = j["model"]["name"].get<std::string>();
  if (j["model"].contains("parameters")) {
    if (!j["model"]["parameters"].is_object())
      throw ConfigError("model.parameters must be an object");
    for (const auto& [key, value] : j["model"]["parameters"].items()) {
      if (!value.is_number())
        throw ConfigError("model parameter '" + key + "' must be numeric");
      cfg.parameters[key] = value.get<double>();
    }
  }

  if (j.contains("initial")) {
    const json& init = j["initial"];
    require_keys(init, {"type", "t", "x", "eta", "ystar"}, "initial");
    cfg.has_initial = true;
    const std::string type =
        init.contains("type") ? init["type"].get<std::string>() : "lagrange";
    if (type == "lagrange") {
      cfg.initial_side = Side::lagrange;
      if (!init.contains("eta"))
        throw ConfigError("lagrange initial state needs 'eta'");
      if (init.contains("ystar"))
        throw ConfigError("lagrange initial state cannot carry 'ystar'");
      cfg.v0 = to_vector(init["eta"], "initial.eta");
    } else if (type == "hamilton") {
      cfg.initial_side = Side::hamilton;
      if (!init.contains("ystar"))
        throw ConfigError("hamilton initial state needs 'ystar'");
      if (init.contains("eta"))
        throw ConfigError("hamilton initial state cannot carry 'eta'");
      cfg.v0 = to_vector(init["ystar"], "initial.ystar");
    } else {
      throw ConfigError("initial.type must be 'lagrange' or 'hamilton'");
    }
    if (!init.contains("x")) throw ConfigError("initial.x is required");
    cfg.x0 = to_vector(init["x"], "initial.x");
    cfg.t0 = init.value("t", 0.0);
  }

  if (j.contains("integrator")) {
    const json& integ = j["integrator"];
    require_keys(integ,
                 {"method", "dt", "rtol", "atol", "max_steps",
                  "sample_interval"},
                 "integrator");
    const std::string method = integ.value("method", "rk45");
    if (method == "rk4") {
      cfg.integrator.method = Method::rk4;
    } else if (method == "rk45") {
      cfg.integrator.method = Method::rk45;
    } else {
      throw ConfigError("integrator.method must be 'rk4' or 'rk45'");
    }
    cfg.integrator.dt = integ.value("dt", cfg.integrator.dt);
    cfg.integrator.rtol = integ.value("rtol", cfg.integrator.rtol);
    cfg.integrator.atol = integ.value("atol", cfg.integrator.atol);
    cfg.integrator.max_steps =
        integ.value("max_steps", cfg.integrator.max_steps);
    cfg.integrator.sample_interval =
        integ.value("sample_interval", cfg.integrator.sample_interval);
    if (cfg.integrator.dt <= 0.0 || cfg.integrator.rtol <= 0.0 ||
        cfg.integrator.atol <= 0.0 || cfg.integrator.max_steps <= 0)
      throw ConfigError("integrator settings must be positive");
  }

  if (!j.contains("horizon") || !j["horizon"].is_number())
    throw ConfigError("horizon (number) is required");
  cfg.horizon = j["horizon"].get<double>();
  if (!(cfg.horizon > 0.0)) throw ConfigError("horizon must be positive");

  if (j.contains("loop")) {
    const json& lp = j["loop"];
    require_keys(lp,
                 {"center", "radii_x", "radii_ystar", "time_amplitude",
                  "samples", "tangent_scheme", "tau_shapes", "slide_count",
                  "thresholds", "convergence"},
                 "loop");
    cfg.loop.present = true;
    if (lp.contains("center")) {
      require_keys(lp["center"], {"t", "x", "ystar"}, "loop.center");
      cfg.loop.has_center = true;
      cfg.loop.t0 = lp["center"].value("t", 0.0);
      if (!lp["center"].contains("x") || !lp["center"].contains("ystar"))
        throw ConfigError("loop.center needs x and ystar");
      cfg.loop.center_x = to_vector(lp["center"]["x"], "loop.center.x");
      cfg.loop.center_ystar =
          to_vector(lp["center"]["ystar"], "loop.center.ystar");
    }
    if (!lp.contains("radii_x") || !lp.contains("radii_ystar"))
      throw ConfigError("loop needs radii_x and radii_ystar");
    cfg.loop.radii_x = to_vector(lp["radii_x"], "loop.radii_x");
    cfg.loop.radii_ystar = to_vector(lp["radii_ystar"], "loop.radii_ystar");
    cfg.loop.time_amplitude = lp.value("time_amplitude", 0.0);
    cfg.loop.samples = lp.value("samples", 256);
    if (cfg.loop.samples < 8) throw ConfigError("loop.samples must be >= 8");
    const std::string scheme = lp.value("tangent_scheme", "central4");
    if (scheme == "central4") {
      cfg.loop.scheme = TangentScheme::central4;
    } else if (scheme == "fft") {
      cfg.loop.scheme = TangentScheme::fft;
    } else {
      throw ConfigError("tangent_scheme must be 'central4' or 'fft'");
    }
    if (lp.contains("tau_shapes")) {
      if (!lp["tau_shapes"].is_array())
        throw ConfigError("loop.tau_shapes must be an array");
      cfg.loop.tau_shapes.clear();
      for (const auto& shape : lp["tau_shapes"])
        cfg.loop.tau_shapes.push_back(shape.get<std::string>());
      if (cfg.loop.tau_shapes.empty())
        throw ConfigError("loop.tau_shapes must not be empty");
    }
    cfg.loop.slide_count = lp.value("slide_count", 5);
    if (cfg.loop.slide_count < 1)
      throw ConfigError("loop.slide_count must be >= 1");
    if (lp.contains("thresholds")) {
      require_keys(lp["thresholds"], {"max_rel_drift", "max_linear_drift"},
                   "loop.thresholds");
      if (lp["thresholds"].contains("max_rel_drift"))
        cfg.loop.max_rel_drift = lp["thresholds"]["max_rel_drift"].get<double>();
      if (lp["thresholds"].contains("max_linear_drift"))
        cfg.loop.max_linear_drift =
            lp["thresholds"]["max_linear_drift"].get<double>();
    }
    if (lp.contains("convergence")) {
      require_keys(lp["convergence"], {"sample_counts", "rtol_values"},
                   "loop.convergence");
      if (lp["convergence"].contains("sample_counts"))
        for (const auto& c : lp["convergence"]["sample_counts"])
          cfg.loop.convergence_samples.push_back(c.get<int>());
      if (lp["convergence"].contains("rtol_values"))
        for (const auto& r : lp["convergence"]["rtol_values"])
          cfg.loop.convergence_rtols.push_back(r.get<double>());
    }
  }

  if (j.contains("outputs")) {
    require_keys(j["outputs"], {"directory", "formats"}, "outputs");
    cfg.output_dir = j["outputs"].value("directory", cfg.output_dir);
    if (j["outputs"].contains("formats")) {
      cfg.formats.clear();
      for (const auto& f : j["outputs"]["formats"]) {
        const std::string fmt = f.get<std::string>();
        if (fmt != "csv" && fmt != "json")
          throw ConfigError("outputs.formats entries must be 'csv' or 'json'");
        cfg.formats.push_back(fmt);
      }
    }
  }
  return cfg;
}

ModelDescriptor scenario_model(const ScenarioConfig& cfg) {
  return get_model(cfg.model_name, cfg.parameters);
}

TauShape make_tau_shape(const std::string& label) {
  if (label == "const") return {"const", [](double) { return 1.0; }};
  if (label == "sin")
    return {"sin",
            [](double s) { return 1.0 + 0.5 * std::sin(2.0 * M_PI * s); }};
  throw ConfigError("unknown tau shape '" + label + "' (use 'const' or 'sin')");
}

LoopSpec scenario_loop(const ScenarioConfig& cfg, const ModelDescriptor& desc) {
  if (!cfg.loop.present) throw ConfigError("config has no loop section");
  const int n = desc.n;
  const int m = desc.m;
  if (cfg.loop.radii_x.size() != n)
    throw ConfigError("loop.radii_x must have n entries");
  if (cfg.loop.radii_ystar.size() != m)
    throw ConfigError("loop.radii_ystar must have m entries");

  double t0 = cfg.loop.t0;
  VectorXd cx, cy;
  if (cfg.loop.has_center) {
    cx = cfg.loop.center_x;
    cy = cfg.loop.center_ystar;
    if (cx.size() != n || cy.size() != m)
      throw ConfigError("loop.center dimensions do not match the model");
  } else {
    const LagrangeState& s = desc.default_initial;
    t0 = s.t;
    cx = s.x;
    cy = reduced_momenta(desc.model, s.eta_i, s.x, s.t);
  }

  const VectorXd rx = cfg.loop.radii_x;
  const VectorXd ry = cfg.loop.radii_ystar;
  const double ta = cfg.loop.time_amplitude;
  LoopSpec loop;
  loop.N = cfg.loop.samples;
  // cos on the x offsets, sin on the y* offsets: each (x_j, y*_j) pair
  // traces an ellipse, so their base-loop contributions add instead of
  // cancelling.
  loop.base = [n, m, t0, cx, cy, rx, ry, ta](double s) {
    const double c = std::cos(2.0 * M_PI * s);
    const double sn = std::sin(2.0 * M_PI * s);
    PhaseState p;
    p.x.resize(n);
    p.ystar.resize(m);
    for (int q = 0; q < n; ++q) p.x[q] = cx[q] + rx[q] * c;
    for (int jj = 0; jj < m; ++jj) p.ystar[jj] = cy[jj] + ry[jj] * sn;
    p.t = t0 + ta * sn;
    return p;
  };
  return loop;
}

SimulationSeries simulate_series(const ScenarioConfig& cfg,
                                 const ModelDescriptor& desc) {
  const LagrangianModel& model = desc.model;
  const int n = desc.n;
  const int m = desc.m;
  const int na = n - m;

  double t0 = desc.default_initial.t;
  VectorXd x0 = desc.default_initial.x;
  VectorXd v0;
  const bool hamilton = cfg.has_initial &&
                        cfg.initial_side == ScenarioConfig::Side::hamilton;
  if (cfg.has_initial) {
    if (cfg.x0.size() != n) throw ConfigError("initial.x must have n entries");
    if (cfg.v0.size() != m)
      throw ConfigError(hamilton ? "initial.ystar must have m entries"
                                 : "initial.eta must have m entries");
    t0 = cfg.t0;
    x0 = cfg.x0;
    v0 = cfg.v0;
  } else {
    v0 = desc.default_initial.eta_i;
  }

  // eta_i at t0, whichever side the state was given on.
  const VectorXd eta0 =
      hamilton ? legendre_invert(model, x0, v0, t0) : v0;

  // The integrated state carries the dependent eta block as transported
  // copies so the constraint residual measures real integration drift.
  VectorXd z0(n + m + na);
  const VectorXd primary0 =
      hamilton ? v0 : eta0;
  z0 << x0, primary0,
      (na > 0 ? VectorXd(model.constraints->phi_at(eta0, x0, t0))
              : VectorXd(0));

  auto guess = std::make_shared<VectorXd>(eta0);
  Rhs rhs = [&model, n, m, na, hamilton, guess](double t, const VectorXd& z) {
    const VectorXd x = z.head(n);
    VectorXd dz(z.size());
    VectorXd eta_i, eta_dot, xdot;
    if (hamilton) {
      const HamiltonRhs r =
          eom_rhs_hamilton(model, PhaseState{t, x, z.segment(n, m)}, *guess);
      *guess = r.eta_i;
      dz.head(n) = r.xdot;
      dz.segment(n, m) = r.ystar_dot;
      eta_i = r.eta_i;
      eta_dot = r.eta_dot;
      xdot = r.xdot;
    } else {
      const LagrangeRhs r =
          eom_rhs_lagrange(model, LagrangeState{t, x, z.segment(n, m)});
      dz.head(n) = r.xdot;
      dz.segment(n, m) = r.eta_dot;
      eta_i = z.segment(n, m);
      eta_dot = r.eta_dot;
      xdot = r.xdot;
    }
    if (na > 0) {
      const ConstraintSet& cs = *model.constraints;
      dz.tail(na) = cs.dphi_dt_at(eta_i, x, t) +
                    cs.dphi_dx_at(eta_i, x, t) * xdot +
                    cs.dphi_deta_at(eta_i, x, t) * eta_dot;
    }
    return dz;
  };

  const Trajectory traj =
      integrate(rhs, z0, t0, t0 + cfg.horizon, cfg.integrator);

  SimulationSeries data;
  data.steps = traj.steps;
  data.rejected = traj.rejected;
  data.rhs_evals = traj.rhs_evals;
  data.side = hamilton ? "hamilton" : "lagrange";

  VectorXd row_guess = eta0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    const VectorXd& z = traj.states[k];
    SimulationRow row;
    row.t = t;
    row.x = z.head(n);
    if (hamilton) {
      row.ystar = z.segment(n, m);
      row.eta_i = legendre_invert(model, row.x, row.ystar, t, row_guess);
      row_guess = row.eta_i;
    } else {
      row.eta_i = z.segment(n, m);
      row.ystar = reduced_momenta(model, row.eta_i, row.x, t);
    }
    row.hstar = row.eta_i.dot(row.ystar) -
                reduced_lagrangian(model, row.eta_i, row.x, t);
    if (na > 0) {
      const VectorXd phi = model.constraints->phi_at(row.eta_i, row.x, t);
      row.residual = (z.tail(na) - phi).cwiseAbs();
    } else {
      row.residual.resize(0);
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

namespace {

std::string trajectory_csv(const SimulationSeries& data, int n, int m, int na) {
  std::ostringstream os;
  os << "t";
  for (int q = 1; q <= n; ++q) os << ",x_" << q;
  for (int j = 1; j <= m; ++j) os << ",eta_" << j;
  for (int j = 1; j <= m; ++j) os << ",ystar_" << j;
  os << ",Hstar";
  for (int a = 1; a <= na; ++a) os << ",constraint_residual_" << a;
  os << "\n";
  for (const auto& row : data.rows) {
    os << format_double(row.t);
    for (int q = 0; q < n; ++q) os << "," << format_double(row.x[q]);
    for (int j = 0; j < m; ++j) os << "," << format_double(row.eta_i[j]);
    for (int j = 0; j < m; ++j) os << "," << format_double(row.ystar[j]);
    os << "," << format_double(row.hstar);
    for (int a = 0; a < na; ++a) os << "," << format_double(row.residual[a]);
    os << "\n";
  }
  return os.str();
}

}  // namespace

RunResult run_simulate(const ScenarioConfig& cfg) {
  RunResult result;
  ModelDescriptor desc;
  try {
    desc = scenario_model(cfg);
  } catch (const Error& e) {
    return {kConfigError, e.what(), {}};
  }

  SimulationSeries data;
  try {
    data = simulate_series(cfg, desc);
  } catch (const ConfigError& e) {
    return {kConfigError, e.what(), {}};
  } catch (const Error& e) {
    return {kNumericalError, std::string("simulation failed: ") + e.what(), {}};
  }

  std::filesystem::create_directories(cfg.output_dir);
  const int na = desc.n - desc.m;
  for (const std::string& fmt : cfg.formats) {
    if (fmt == "csv") {
      const std::string path = cfg.output_dir + "/trajectory.csv";
      write_file(path, trajectory_csv(data, desc.n, desc.m, na));
      result.outputs.push_back(path);
    } else if (fmt == "json") {
      json meta;
      meta["schema_version"] = 1;
      meta["model"] = desc.name;
      meta["parameters"] = desc.parameters;
      meta["config_hash"] = cfg.config_hash;
      meta["side"] = data.side;
      meta["horizon"] = cfg.horizon;
      meta["samples"] = data.rows.size();
      meta["steps"] = data.steps;
      meta["rejected_steps"] = data.rejected;
      meta["rhs_evaluations"] = data.rhs_evals;
      const std::string path = cfg.output_dir + "/run.json";
      write_file(path, meta.dump(2) + "\n");
      result.outputs.push_back(path);
    }
  }
  result.message = "simulated " + desc.name + " over horizon " +
                   format_double(cfg.horizon) + " (" +
                   std::to_string(data.rows.size()) + " samples)";
  return result;
}

RunResult run_invariant(const ScenarioConfig& cfg) {
  RunResult result;
  ModelDescriptor desc;
  LoopSpec loop;
  std::vector<TauShape> shapes;
  try {
    desc = scenario_model(cfg);
    loop = scenario_loop(cfg, desc);
    for (const std::string& label : cfg.loop.tau_shapes)
      shapes.push_back(make_tau_shape(label));
  } catch (const Error& e) {
    return {kConfigError, e.what(), {}};
  }

  std::vector<double> slides;
  for (int k = 0; k <= cfg.loop.slide_count; ++k)
    slides.push_back(cfg.horizon * k / cfg.loop.slide_count);

  DriftOptions options;
  options.scheme = cfg.loop.scheme;
  options.sample_counts = cfg.loop.convergence_samples;
  options.rtol_values = cfg.loop.convergence_rtols;

  DriftReport report;
  try {
    report = drift_report(loop, desc.model, cfg.integrator, shapes, slides,
                          options);
  } catch (const Error& e) {
    return {kNumericalError, std::string("invariant study failed: ") + e.what(),
            {}};
  }

  std::filesystem::create_directories(cfg.output_dir);
  {
    std::ostringstream os;
    os << "slide_index,tau_label,slide,I,I1,rel_drift\n";
    int idx = 0;
    for (const auto& entry : report.entries) {
      os << idx++ << "," << entry.tau_label << ","
         << format_double(entry.slide) << "," << format_double(entry.value)
         << "," << (entry.has_linear ? format_double(entry.linear) : "")
         << "," << format_double(entry.rel_drift) << "\n";
    }
    const std::string path = cfg.output_dir + "/invariant_drift.csv";
    write_file(path, os.str());
    result.outputs.push_back(path);
  }
  {
    std::ostringstream os;
    os << "samples,rtol,max_rel_drift\n";
    for (const auto& row : report.convergence)
      os << row.samples << "," << format_double(row.rtol) << ","
         << format_double(row.max_rel_drift) << "\n";
    const std::string path = cfg.output_dir + "/invariant_convergence.csv";
    write_file(path, os.str());
    result.outputs.push_back(path);
  }
  {
    json rep;
    rep["schema_version"] = 1;
    rep["model"] = desc.name;
    rep["config_hash"] = cfg.config_hash;
    rep["base_value"] = report.base_value;
    if (report.base_has_linear) rep["base_linear"] = report.base_linear;
    rep["max_rel_drift"] = report.max_rel_drift;
    if (report.has_linear_drift)
      rep["max_linear_drift"] = report.max_linear_drift;
    rep["failures"] = report.failures;
    json entries = json::array();
    for (const auto& entry : report.entries) {
      json e;
      e["tau"] = entry.tau_label;
      e["slide"] = entry.slide;
      e["I"] = entry.value;
      if (entry.has_linear) e["I1"] = entry.linear;
      e["rel_drift"] = entry.rel_drift;
      entries.push_back(e);
    }
    rep["slices"] = entries;
    json conv = json::array();
    for (const auto& row : report.convergence) {
      json r;
      r["samples"] = row.samples;
      r["rtol"] = row.rtol;
      r["max_rel_drift"] = row.max_rel_drift;
      conv.push_back(r);
    }
    rep["convergence"] = conv;
    const std::string path = cfg.output_dir + "/invariant_report.json";
    write_file(path, rep.dump(2) + "\n");
    result.outputs.push_back(path);
  }

  if (!report.failures.empty()) {
    result.exit_code = kNumericalError;
    result.message = "invariant study had failures: " + report.failures.front();
    return result;
  }
  std::ostringstream msg;
  msg << "max relative drift " << format_double(report.max_rel_drift);
  if (cfg.loop.max_rel_drift && report.max_rel_drift > *cfg.loop.max_rel_drift) {
    result.exit_code = kThresholdViolated;
    msg << " exceeds threshold " << format_double(*cfg.loop.max_rel_drift);
  }
  if (cfg.loop.max_linear_drift && report.has_linear_drift &&
      report.max_linear_drift > *cfg.loop.max_linear_drift) {
    result.exit_code = kThresholdViolated;
    msg << "; linear drift " << format_double(report.max_linear_drift)
        << " exceeds threshold " << format_double(*cfg.loop.max_linear_drift);
  }
  result.message = msg.str();
  return result;
}

}  // namespace nhmech
