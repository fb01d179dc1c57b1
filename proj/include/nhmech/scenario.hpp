#ifndef NHMECH_SCENARIO_HPP
#define NHMECH_SCENARIO_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nhmech/invariant.hpp"
#include "nhmech/models.hpp"

namespace nhmech {

/// Exit codes shared by the library runners and the CLI.
enum ExitCode {
  kOk = 0,
  kCheckFailed = 1,
  kConfigError = 2,
  kNumericalError = 3,
  kThresholdViolated = 4,
};

/// Parsed scenario; json input is schema-validated (versioned, unknown
/// keys rejected) before any computation runs.
struct ScenarioConfig {
  int schema_version = 1;
  std::string model_name;
  std::map<std::string, double> parameters;

  enum class Side { lagrange, hamilton };
  Side initial_side = Side::lagrange;
  bool has_initial = false;
  double t0 = 0.0;
  Eigen::VectorXd x0;
  Eigen::VectorXd v0;  // eta_i (lagrange) or ystar (hamilton)

  IntegratorConfig integrator;
  double horizon = 10.0;

  struct Loop {
    bool present = false;
    bool has_center = false;
    double t0 = 0.0;
    Eigen::VectorXd center_x;
    Eigen::VectorXd center_ystar;
    Eigen::VectorXd radii_x;
    Eigen::VectorXd radii_ystar;
    double time_amplitude = 0.0;
    int samples = 256;
    TangentScheme scheme = TangentScheme::central4;
    std::vector<std::string> tau_shapes = {"const"};
    int slide_count = 5;
    std::optional<double> max_rel_drift;
    std::optional<double> max_linear_drift;
    std::vector<int> convergence_samples;
    std::vector<double> convergence_rtols;
  } loop;

  std::string output_dir = "out";
  std::vector<std::string> formats = {"csv", "json"};

  std::string config_hash;  // of the raw config bytes

  static ScenarioConfig load(const std::string& path);
  static ScenarioConfig parse(const std::string& text);
};

/// Builds the model with the scenario's parameter overrides applied.
ModelDescriptor scenario_model(const ScenarioConfig& cfg);

/// Closed loop in extended reduced phase space from the scenario's loop
/// block: coordinate k of (x, ystar) is offset by radius_k times
/// cos/sin(2 pi s) (alternating by index), and the loop time is
/// t0 + time_amplitude sin(2 pi s).
LoopSpec scenario_loop(const ScenarioConfig& cfg, const ModelDescriptor& desc);

/// Named tau shapes accepted in configs: "const" and "sin"
/// (tau(s) = 1 + sin(2 pi s)/2).
TauShape make_tau_shape(const std::string& label);

struct RunResult {
  int exit_code = kOk;
  std::string message;
  std::vector<std::string> outputs;  // files written
};

struct SimulationRow {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd eta_i;
  Eigen::VectorXd ystar;
  double hstar = 0.0;
  Eigen::VectorXd residual;  // |eta_alpha - phi_alpha| of the transported block
};

struct SimulationSeries {
  std::vector<SimulationRow> rows;
  std::int64_t steps = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_evals = 0;
  std::string side;
};

/// Integrates the scenario (Lagrange or Hamilton side per the initial
/// state) carrying the dependent eta block as transported copies, so the
/// reported constraint residual measures real integration drift.
SimulationSeries simulate_series(const ScenarioConfig& cfg,
                                 const ModelDescriptor& desc);

/// Integrates the scenario and writes trajectory.csv + run.json.
RunResult run_simulate(const ScenarioConfig& cfg);

/// Propagates the scenario loop, evaluates the invariants over the slide
/// grid, and writes invariant_drift.csv, invariant_convergence.csv and
/// invariant_report.json. Threshold violations exit with code 4.
RunResult run_invariant(const ScenarioConfig& cfg);

struct CheckItem {
  std::string model;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool all_pass = true;
};

/// Runs the cross-module identity suite on the registry (optionally one
/// model), including the A*-ablation when break_astar is set.
CheckReport run_check(const std::string& model_filter = "",
                      bool break_astar = false);

}  // namespace nhmech

#endif
