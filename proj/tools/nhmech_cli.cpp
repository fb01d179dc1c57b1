#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nhmech/errors.hpp"
#include "nhmech/scenario.hpp"

namespace {

using nlohmann::json;

int cmd_simulate(const std::string& config_path) {
  nhmech::ScenarioConfig cfg;
  try {
    cfg = nhmech::ScenarioConfig::load(config_path);
  } catch (const nhmech::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return nhmech::kConfigError;
  }
  const nhmech::RunResult result = nhmech::run_simulate(cfg);
  (result.exit_code == nhmech::kOk ? std::cout : std::cerr)
      << result.message << "\n";
  for (const auto& path : result.outputs) std::cout << "wrote " << path << "\n";
  return result.exit_code;
}

int cmd_invariant(const std::string& config_path) {
  nhmech::ScenarioConfig cfg;
  try {
    cfg = nhmech::ScenarioConfig::load(config_path);
  } catch (const nhmech::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return nhmech::kConfigError;
  }
  if (!cfg.loop.present) {
    std::cerr << "config error: invariant command needs a loop section\n";
    return nhmech::kConfigError;
  }
  const nhmech::RunResult result = nhmech::run_invariant(cfg);
  (result.exit_code == nhmech::kOk ? std::cout : std::cerr)
      << result.message << "\n";
  for (const auto& path : result.outputs) std::cout << "wrote " << path << "\n";
  return result.exit_code;
}

int cmd_check(const std::string& model, bool break_astar, bool as_json) {
  nhmech::CheckReport report;
  try {
    report = nhmech::run_check(model, break_astar);
  } catch (const nhmech::Error& e) {
    std::cerr << "check failed to run: " << e.what() << "\n";
    return nhmech::kCheckFailed;
  }
  if (as_json) {
    json out;
    out["all_pass"] = report.all_pass;
    json items = json::array();
    for (const auto& item : report.items) {
      json entry;
      entry["model"] = item.model;
      entry["check"] = item.name;
      entry["value"] = item.value;
      entry["threshold"] = item.threshold;
      entry["pass"] = item.pass;
      if (!item.note.empty()) entry["note"] = item.note;
      items.push_back(entry);
    }
    out["checks"] = items;
    std::cout << out.dump(2) << "\n";
  } else {
    std::printf("%-32s %-28s %-12s %-12s %s\n", "model", "check", "value",
                "threshold", "status");
    for (const auto& item : report.items) {
      std::printf("%-32s %-28s %-12.3e %-12.3e %s%s%s\n", item.model.c_str(),
                  item.name.c_str(), item.value, item.threshold,
                  item.pass ? "PASS" : "FAIL",
                  item.note.empty() ? "" : "  ", item.note.c_str());
    }
    std::printf("%s\n", report.all_pass ? "all checks passed"
                                        : "some checks FAILED");
  }
  return report.all_pass ? nhmech::kOk : nhmech::kCheckFailed;
}

int cmd_list_models(bool as_json) {
  json out = json::array();
  for (const std::string& name : nhmech::model_names()) {
    const nhmech::ModelDescriptor desc = nhmech::get_model(name);
    if (as_json) {
      json entry;
      entry["name"] = desc.name;
      entry["n"] = desc.n;
      entry["m"] = desc.m;
      entry["constrained"] = static_cast<bool>(desc.model.constraints);
      entry["parameters"] = desc.parameters;
      switch (desc.reference) {
        case nhmech::OracleKind::closed_form:
          entry["oracle"] = "closed_form";
          break;
        case nhmech::OracleKind::dae_multiplier:
          entry["oracle"] = "dae_multiplier";
          break;
        case nhmech::OracleKind::euler_equations:
          entry["oracle"] = "euler_equations";
          break;
        case nhmech::OracleKind::none:
          entry["oracle"] = "none";
          break;
      }
      entry["summary"] = desc.summary;
      out.push_back(entry);
    } else {
      std::printf("%-32s n=%d m=%d %s\n", desc.name.c_str(), desc.n, desc.m,
                  desc.summary.c_str());
      std::printf("    parameters:");
      for (const auto& [key, value] : desc.parameters)
        std::printf(" %s=%g", key.c_str(), value);
      std::printf("\n");
    }
  }
  if (as_json) std::cout << out.dump(2) << "\n";
  return nhmech::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nhmech: nonholonomic mechanics in the Poincare group-frame "
               "formalism"};
  app.require_subcommand(1);

  std::string config_path;
  auto* simulate = app.add_subcommand("simulate", "integrate a scenario");
  simulate->add_option("config", config_path, "scenario JSON file")
      ->required();

  auto* invariant =
      app.add_subcommand("invariant", "loop-invariant drift study");
  invariant->add_option("config", config_path, "scenario JSON file")
      ->required();

  std::string model_filter;
  bool break_astar = false;
  bool as_json = false;
  auto* check = app.add_subcommand("check", "run the identity suite");
  check->add_option("--model", model_filter, "restrict to one model");
  check->add_flag("--break-astar", break_astar,
                  "ablate the A*-term (expected failures)");
  check->add_flag("--json", as_json, "machine-readable output");

  auto* list = app.add_subcommand("list-models", "print the model registry");
  list->add_flag("--json", as_json, "machine-readable output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(config_path);
    if (invariant->parsed()) return cmd_invariant(config_path);
    if (check->parsed()) return cmd_check(model_filter, break_astar, as_json);
    if (list->parsed()) return cmd_list_models(as_json);
  } catch (const nhmech::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nhmech::kNumericalError;
  }
  return 0;
}
