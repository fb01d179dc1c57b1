#ifndef NHMECH_INTEGRATE_HPP
#define NHMECH_INTEGRATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nhmech {

enum class Method { rk4, rk45 };

struct IntegratorConfig {
  Method method = Method::rk45;
  double dt = 1e-2;       // fixed step (rk4); initial step (rk45)
  double rtol = 1e-8;     // rk45
  double atol = 1e-10;    // rk45
  std::int64_t max_steps = 10'000'000;
  double sample_interval = 0.0;  // 0 = endpoints only
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::int64_t steps = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_evals = 0;

  const Eigen::VectorXd& back() const { return states.back(); }
};

using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Advances y' = rhs(t, y) from t0 to t1, sampling on the uniform cadence
/// sample_interval (steps are shortened to land exactly on each sample
/// boundary and on t1; no interpolation). Deterministic: identical inputs
/// give bit-identical trajectories.
Trajectory integrate(const Rhs& rhs, const Eigen::VectorXd& y0, double t0,
                     double t1, const IntegratorConfig& cfg);

/// Same stepper, but samples exactly at the given sorted times
/// (each >= t0). The first requested time may equal t0.
Trajectory integrate_at(const Rhs& rhs, const Eigen::VectorXd& y0, double t0,
                        const std::vector<double>& times,
                        const IntegratorConfig& cfg);

}  // namespace nhmech

#endif
