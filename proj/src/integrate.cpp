#include "nhmech/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "nhmech/errors.hpp"

namespace nhmech {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Stepper {
  const Rhs& rhs;
  const IntegratorConfig& cfg;
  Trajectory& traj;

  Eigen::VectorXd eval(double t, const Eigen::VectorXd& y) {
    ++traj.rhs_evals;
    Eigen::VectorXd v;
    try {
      v = rhs(t, y);
    } catch (const Error& e) {
      throw RhsFailure(std::string("rhs failed: ") + e.what(), t);
    }
    if (!v.allFinite())
      throw RhsFailure("rhs produced a non-finite derivative", t);
    return v;
  }

  Eigen::VectorXd rk4_step(double t, const Eigen::VectorXd& y, double h) {
    const Eigen::VectorXd k1 = eval(t, y);
    const Eigen::VectorXd k2 = eval(t + h / 2, y + (h / 2) * k1);
    const Eigen::VectorXd k3 = eval(t + h / 2, y + (h / 2) * k2);
    const Eigen::VectorXd k4 = eval(t + h, y + h * k3);
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
  }

  // One Dormand-Prince attempt; fills ynew and the scaled error norm.
  void dp_step(double t, const Eigen::VectorXd& y, double h,
               Eigen::VectorXd& ynew, double& err) {
    const Eigen::VectorXd k1 = eval(t, y);
    const Eigen::VectorXd k2 = eval(t + c2 * h, y + h * (a21 * k1));
    const Eigen::VectorXd k3 = eval(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 =
        eval(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 = eval(
        t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 =
        eval(t + h,
             y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::VectorXd k7 = eval(t + h, ynew);
    const Eigen::VectorXd de =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc =
          cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = de[i] / sc;
      err += r * r;
    }
    err = std::sqrt(err / std::max<Eigen::Index>(1, y.size()));
  }

  // Advance to exactly t_target, recording nothing; returns final state.
  Eigen::VectorXd advance(double t, Eigen::VectorXd y, double t_target,
                          double& h) {
    while (t < t_target) {
      if (++traj.steps > cfg.max_steps)
        throw MaxStepsExceeded("max_steps exceeded at t=" + std::to_string(t));
      double step = std::min(h, t_target - t);
      if (cfg.method == Method::rk4) {
        y = rk4_step(t, y, step);
        t += step;
        continue;
      }
      Eigen::VectorXd ynew;
      double err;
      dp_step(t, y, step, ynew, err);
      if (err <= 1.0) {
        t += step;
        y = std::move(ynew);
        const double grow =
            err == 0.0 ? 5.0
                       : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h = step * grow;
      } else {
        ++traj.rejected;
        h = step * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
        if (!(h > 0.0) || t + h == t)
          throw MaxStepsExceeded("step size underflow at t=" +
                                 std::to_string(t));
      }
    }
    return y;
  }
};

}  // namespace

Trajectory integrate_at(const Rhs& rhs, const Eigen::VectorXd& y0, double t0,
                        const std::vector<double>& times,
                        const IntegratorConfig& cfg) {
  if (cfg.dt <= 0.0) throw Error("integrator dt must be positive");
  if (cfg.rtol <= 0.0 || cfg.atol <= 0.0)
    throw Error("integrator tolerances must be positive");
  if (cfg.max_steps <= 0) throw Error("max_steps must be positive");

  Trajectory traj;
  Stepper stepper{rhs, cfg, traj};
  Eigen::VectorXd y = y0;
  double t = t0;
  double h = cfg.dt;
  for (double target : times) {
    if (target < t - 1e-14)
      throw Error("integrate_at times must be non-decreasing");
    if (target > t) {
      y = stepper.advance(t, std::move(y), target, h);
      t = target;
    }
    traj.times.push_back(target);
    traj.states.push_back(y);
  }
  return traj;
}

Trajectory integrate(const Rhs& rhs, const Eigen::VectorXd& y0, double t0,
                     double t1, const IntegratorConfig& cfg) {
  if (!(t1 > t0)) throw Error("integrate requires t1 > t0");
  std::vector<double> times;
  times.push_back(t0);
  if (cfg.sample_interval > 0.0) {
    const std::int64_t count =
        static_cast<std::int64_t>(std::floor((t1 - t0) / cfg.sample_interval));
    for (std::int64_t k = 1; k <= count; ++k) {
      const double tk = t0 + k * cfg.sample_interval;
      if (tk < t1 - 1e-12 * (1.0 + std::abs(t1))) times.push_back(tk);
    }
  }
  times.push_back(t1);
  return integrate_at(rhs, y0, t0, times, cfg);
}

}  // namespace nhmech
