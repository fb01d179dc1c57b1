#ifndef NHMECH_MODELS_HPP
#define NHMECH_MODELS_HPP

#include <map>
#include <string>
#include <vector>

#include "nhmech/dynamics.hpp"
#include "nhmech/integrate.hpp"

namespace nhmech {

enum class OracleKind { closed_form, dae_multiplier, euler_equations, none };

/// Fully specified benchmark system: frame, constraints, Lagrangian,
/// documented-safe default initial state, and the reference oracle used
/// for cross-validation.
struct ModelDescriptor {
  std::string name;
  int n = 0;
  int m = 0;
  LagrangianModel model;
  std::map<std::string, double> parameters;
  OracleKind reference = OracleKind::none;
  LagrangeState default_initial;
  std::string summary;
};

/// Names in registration order.
std::vector<std::string> model_names();

/// Builds and self-checks a descriptor. Unknown names raise UnknownModel;
/// out-of-range or unknown parameters raise InvalidParameter.
ModelDescriptor get_model(const std::string& name,
                          const std::map<std::string, double>& overrides = {});

/// Reference trajectory from the model's independent oracle formulation.
/// States are laid out [x(n); eta_i(m)], matching the engine's
/// Lagrange-side trajectories.
Trajectory oracle_trajectory(const ModelDescriptor& desc,
                             const LagrangeState& initial, double horizon,
                             const IntegratorConfig& cfg);

}  // namespace nhmech

#endif
