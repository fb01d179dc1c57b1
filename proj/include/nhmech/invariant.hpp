#ifndef NHMECH_INVARIANT_HPP
#define NHMECH_INVARIANT_HPP

#include <functional>
#include <string>
#include <vector>

#include "nhmech/dynamics.hpp"
#include "nhmech/integrate.hpp"

namespace nhmech {

/// Smooth closed curve s in [0,1) -> extended reduced phase space,
/// sampled at N points. An s-dependent time makes the loop asynchronous.
struct LoopSpec {
  std::function<PhaseState(double)> base;
  int N = 256;
};

/// The loop after sliding each sample along its trajectory by tau(s).
struct TubeSlice {
  std::vector<PhaseState> points;
  std::vector<double> tau;
};

using TauFn = std::function<double(double)>;

/// Advances every loop sample by duration tau(s) along the
/// Poincare-Hamilton flow. tau identically 0 returns the sampled base
/// loop. With spot_check, two samples are re-integrated in two legs and
/// compared against the single-leg result.
TubeSlice propagate_tube(const LoopSpec& loop, const LagrangianModel& model,
                         const IntegratorConfig& cfg, const TauFn& tau,
                         bool spot_check = false);

/// All slices for every (shape, slide) pair, integrating each sample's
/// trajectory once across the whole grid. Result is indexed
/// [shape][slide].
std::vector<std::vector<TubeSlice>> propagate_tube_grid(
    const LoopSpec& loop, const LagrangianModel& model,
    const IntegratorConfig& cfg, const std::vector<TauFn>& tau_shapes,
    const std::vector<double>& slide_grid);

enum class TangentScheme { central4, fft };

/// Generalized Poincare-Cartan loop integral
///   I = closed-integral ( y*_j Omega_j - H* Omega_0 )
/// with loop tangents (Delta x, Delta t) by 4th-order periodic central
/// differences (or spectral differentiation) in s, the Omega map through
/// the full inverse frame, and the exact-cadence periodic trapezoid.
double poincare_cartan_integral(const TubeSlice& slice,
                                const LagrangianModel& model,
                                TangentScheme scheme = TangentScheme::central4);

/// Poincare linear integral I_1 = closed-integral y*_j omega_j over a
/// slice of simultaneous states; times must agree within tol_sync.
double poincare_linear_integral(const TubeSlice& slice,
                                const LagrangianModel& model,
                                double tol_sync = 1e-9,
                                TangentScheme scheme = TangentScheme::central4);

struct DriftEntry {
  std::string tau_label;
  double slide = 0.0;
  double value = 0.0;        // I on this slice
  double linear = 0.0;       // I_1 where the slice is synchronous
  bool has_linear = false;
  double rel_drift = 0.0;
};

struct ConvergenceRow {
  int samples = 0;
  double rtol = 0.0;
  double max_rel_drift = 0.0;
};

struct DriftReport {
  double base_value = 0.0;
  double base_linear = 0.0;
  bool base_has_linear = false;
  std::vector<DriftEntry> entries;
  double max_rel_drift = 0.0;
  double max_linear_drift = 0.0;
  bool has_linear_drift = false;
  std::vector<ConvergenceRow> convergence;
  std::vector<std::string> failures;
};

struct DriftOptions {
  std::vector<int> sample_counts;   // defaults to {N/4, N/2, N}
  std::vector<double> rtol_values;  // defaults to {cfg.rtol}
  TangentScheme scheme = TangentScheme::central4;
};

/// Named tau shape for reporting.
struct TauShape {
  std::string label;
  TauFn fn;
};

/// Evaluates I (and I_1 on synchronous slices) over every slide of every
/// tau shape, with convergence tables versus loop resolution and versus
/// integrator tolerance. Per-slice failures are collected, not thrown.
DriftReport drift_report(const LoopSpec& loop, const LagrangianModel& model,
                         const IntegratorConfig& cfg,
                         const std::vector<TauShape>& tau_shapes,
                         const std::vector<double>& slide_grid,
                         const DriftOptions& options = {});

}  // namespace nhmech

#endif
