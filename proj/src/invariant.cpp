#include "nhmech/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>

#include "nhmech/errors.hpp"
#include "nhmech/parallel.hpp"

namespace nhmech {

namespace {

using Eigen::VectorXd;

/// Hamilton-side flow as a flat ODE in [x; ystar], with a per-trajectory
/// warm start for the embedded Legendre inversion.
Rhs hamilton_rhs(const LagrangianModel& model) {
  const int n = model.n();
  const int m = model.m();
  auto guess = std::make_shared<VectorXd>();
  return [&model, n, m, guess](double t, const VectorXd& y) {
    PhaseState s{t, y.head(n), y.tail(m)};
    const HamiltonRhs r = eom_rhs_hamilton(model, s, *guess);
    *guess = r.eta_i;
    VectorXd dy(n + m);
    dy << r.xdot, r.ystar_dot;
    return dy;
  };
}

VectorXd pack(const PhaseState& s) {
  VectorXd y(s.x.size() + s.ystar.size());
  y << s.x, s.ystar;
  return y;
}

PhaseState unpack(const VectorXd& y, double t, int n, int m) {
  return PhaseState{t, y.head(n), y.tail(m)};
}

/// In-place radix-2 FFT; N must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / len * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& z : a) z /= static_cast<double>(n);
}

/// Periodic derivative d/ds of N uniformly spaced samples over [0,1).
std::vector<double> periodic_derivative(const std::vector<double>& f,
                                        TangentScheme scheme) {
  const int N = static_cast<int>(f.size());
  std::vector<double> d(N);
  if (scheme == TangentScheme::central4) {
    auto at = [&](int k) { return f[((k % N) + N) % N]; };
    for (int k = 0; k < N; ++k)
      d[k] = (8.0 * (at(k + 1) - at(k - 1)) - (at(k + 2) - at(k - 2))) * N /
             12.0;
    return d;
  }
  if (N & (N - 1))
    throw Error("fft tangents require a power-of-two sample count");
  std::vector<std::complex<double>> a(f.begin(), f.end());
  fft_radix2(a, false);
  for (int j = 0; j < N; ++j) {
    const int freq = j <= N / 2 ? j : j - N;
    if (j == N / 2) {
      a[j] = 0.0;  // Nyquist mode has no well-defined odd derivative
    } else {
      a[j] *= std::complex<double>(0.0, 2.0 * M_PI * freq);
    }
  }
  fft_radix2(a, true);
  for (int k = 0; k < N; ++k) d[k] = a[k].real();
  return d;
}

struct Tangents {
  std::vector<VectorXd> dx;
  std::vector<double> dt;
};

Tangents loop_tangents(const TubeSlice& slice, TangentScheme scheme) {
  const int N = static_cast<int>(slice.points.size());
  const int n = static_cast<int>(slice.points.front().x.size());
  Tangents tg;
  tg.dx.assign(N, VectorXd::Zero(n));
  std::vector<double> comp(N);
  for (int q = 0; q < n; ++q) {
    for (int k = 0; k < N; ++k) comp[k] = slice.points[k].x[q];
    const std::vector<double> d = periodic_derivative(comp, scheme);
    for (int k = 0; k < N; ++k) tg.dx[k][q] = d[k];
  }
  for (int k = 0; k < N; ++k) comp[k] = slice.points[k].t;
  tg.dt = periodic_derivative(comp, scheme);
  return tg;
}

}  // namespace

TubeSlice propagate_tube(const LoopSpec& loop, const LagrangianModel& model,
                         const IntegratorConfig& cfg, const TauFn& tau,
                         bool spot_check) {
  if (loop.N < 8) throw Error("loop needs at least 8 samples");
  const int n = model.n();
  const int m = model.m();
  TubeSlice slice;
  slice.points.resize(loop.N);
  slice.tau.resize(loop.N);

  parallel_for(loop.N, [&](int k) {
    const double s = static_cast<double>(k) / loop.N;
    const PhaseState base = loop.base(s);
    const double dur = tau(s);
    if (dur < 0.0) throw Error("slide duration must be non-negative");
    slice.tau[k] = dur;
    if (dur == 0.0) {
      slice.points[k] = base;
      return;
    }
    const Trajectory traj = integrate_at(hamilton_rhs(model), pack(base),
                                         base.t, {base.t + dur}, cfg);
    slice.points[k] = unpack(traj.back(), base.t + dur, n, m);
  });

  if (spot_check) {
    for (int k : {0, loop.N / 2}) {
      const double s = static_cast<double>(k) / loop.N;
      const PhaseState base = loop.base(s);
      const double dur = slice.tau[k];
      if (dur == 0.0) continue;
      // Two-leg re-integration must land on the same point.
      const Trajectory leg1 =
          integrate_at(hamilton_rhs(model), pack(base), base.t,
                       {base.t + 0.5 * dur}, cfg);
      const Trajectory leg2 =
          integrate_at(hamilton_rhs(model), leg1.back(), base.t + 0.5 * dur,
                       {base.t + dur}, cfg);
      const double dev =
          (leg2.back() - pack(slice.points[k])).cwiseAbs().maxCoeff();
      if (dev > 1e-6 * (1.0 + pack(base).cwiseAbs().maxCoeff()))
        throw Error("tube spot check failed at sample " + std::to_string(k) +
                    ": two-leg deviation " + std::to_string(dev));
    }
  }
  return slice;
}

std::vector<std::vector<TubeSlice>> propagate_tube_grid(
    const LoopSpec& loop, const LagrangianModel& model,
    const IntegratorConfig& cfg, const std::vector<TauFn>& tau_shapes,
    const std::vector<double>& slide_grid) {
  if (loop.N < 8) throw Error("loop needs at least 8 samples");
  const int n = model.n();
  const int m = model.m();
  const int ns = static_cast<int>(tau_shapes.size());
  const int ng = static_cast<int>(slide_grid.size());

  std::vector<std::vector<TubeSlice>> out(ns, std::vector<TubeSlice>(ng));
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ng; ++j) {
      out[i][j].points.resize(loop.N);
      out[i][j].tau.resize(loop.N);
    }

  parallel_for(loop.N, [&](int k) {
    const double s = static_cast<double>(k) / loop.N;
    const PhaseState base = loop.base(s);
    // All durations this sample needs, integrated in one sweep.
    std::map<double, std::vector<std::pair<int, int>>> by_duration;
    for (int i = 0; i < ns; ++i) {
      const double unit = tau_shapes[i](s);
      if (unit < 0.0) throw Error("tau shape must be non-negative");
      for (int j = 0; j < ng; ++j) {
        const double dur = slide_grid[j] * unit;
        if (dur < 0.0) throw Error("slide must be non-negative");
        by_duration[dur].push_back({i, j});
      }
    }
    std::vector<double> times;
    for (const auto& [dur, _] : by_duration)
      if (dur > 0.0) times.push_back(base.t + dur);

    Trajectory traj;
    if (!times.empty())
      traj = integrate_at(hamilton_rhs(model), pack(base), base.t, times, cfg);

    int idx = 0;
    for (const auto& [dur, users] : by_duration) {
      PhaseState point =
          dur == 0.0 ? base : unpack(traj.states[idx++], base.t + dur, n, m);
      for (const auto& [i, j] : users) {
        out[i][j].points[k] = point;
        out[i][j].tau[k] = dur;
      }
    }
  });
  return out;
}

double poincare_cartan_integral(const TubeSlice& slice,
                                const LagrangianModel& model,
                                TangentScheme scheme) {
  const int N = static_cast<int>(slice.points.size());
  const int m = model.m();
  const Tangents tg = loop_tangents(slice, scheme);

  double acc = 0.0;
  VectorXd guess;
  for (int k = 0; k < N; ++k) {
    const PhaseState& p = slice.points[k];
    const VectorXd omega =
        model.frame.omega_from_dx(p.x, p.t, tg.dx[k], tg.dt[k]);
    double integrand = p.ystar.dot(omega.segment(1, m));
    if (tg.dt[k] != 0.0) {
      const VectorXd eta = legendre_invert(model, p.x, p.ystar, p.t, guess);
      guess = eta;
      const double hstar =
          eta.dot(p.ystar) - reduced_lagrangian(model, eta, p.x, p.t);
      integrand -= hstar * tg.dt[k];
    }
    acc += integrand;
  }
  return acc / N;
}

double poincare_linear_integral(const TubeSlice& slice,
                                const LagrangianModel& model, double tol_sync,
                                TangentScheme scheme) {
  const int N = static_cast<int>(slice.points.size());
  const int m = model.m();
  const double t0 = slice.points.front().t;
  for (const PhaseState& p : slice.points)
    if (std::abs(p.t - t0) > tol_sync)
      throw NonSimultaneousSlice(
          "linear integral needs simultaneous states; time spread " +
          std::to_string(std::abs(p.t - t0)));

  const Tangents tg = loop_tangents(slice, scheme);
  double acc = 0.0;
  for (int k = 0; k < N; ++k) {
    const PhaseState& p = slice.points[k];
    const VectorXd omega = model.frame.omega_from_dx(p.x, p.t, tg.dx[k], 0.0);
    acc += p.ystar.dot(omega.segment(1, m));
  }
  return acc / N;
}

namespace {

TubeSlice subsample(const TubeSlice& slice, int count) {
  const int N = static_cast<int>(slice.points.size());
  const int stride = N / count;
  TubeSlice out;
  out.points.reserve(count);
  out.tau.reserve(count);
  for (int k = 0; k < count; ++k) {
    out.points.push_back(slice.points[k * stride]);
    out.tau.push_back(slice.tau[k * stride]);
  }
  return out;
}

bool slice_synchronous(const TubeSlice& slice, double tol = 1e-9) {
  const double t0 = slice.points.front().t;
  for (const PhaseState& p : slice.points)
    if (std::abs(p.t - t0) > tol) return false;
  return true;
}

}  // namespace

DriftReport drift_report(const LoopSpec& loop, const LagrangianModel& model,
                         const IntegratorConfig& cfg,
                         const std::vector<TauShape>& tau_shapes,
                         const std::vector<double>& slide_grid,
                         const DriftOptions& options) {
  DriftReport report;
  std::vector<int> counts = options.sample_counts;
  if (counts.empty()) counts = {loop.N / 4, loop.N / 2, loop.N};
  // The headline entries live at full resolution and the configured
  // tolerance; make sure both are represented.
  if (std::find(counts.begin(), counts.end(), loop.N) == counts.end())
    counts.push_back(loop.N);
  std::vector<double> rtols = options.rtol_values;
  if (rtols.empty()) rtols = {cfg.rtol};
  if (std::find(rtols.begin(), rtols.end(), cfg.rtol) == rtols.end())
    rtols.insert(rtols.begin(), cfg.rtol);

  std::vector<TauFn> shapes;
  for (const auto& s : tau_shapes) shapes.push_back(s.fn);

  // Base slice: the loop itself (slide 0 of any shape).
  const TubeSlice base =
      propagate_tube(loop, model, cfg, [](double) { return 0.0; });
  report.base_value = poincare_cartan_integral(base, model, options.scheme);
  report.base_has_linear = slice_synchronous(base);
  if (report.base_has_linear)
    report.base_linear =
        poincare_linear_integral(base, model, 1e-9, options.scheme);

  const double denom = std::max(std::abs(report.base_value), 1e-12);
  const double denom_lin =
      std::max(std::abs(report.base_has_linear ? report.base_linear : 0.0),
               1e-12);

  for (double rtol : rtols) {
    IntegratorConfig run_cfg = cfg;
    run_cfg.rtol = rtol;
    const bool primary = rtol == cfg.rtol;

    std::vector<std::vector<TubeSlice>> slices;
    try {
      slices = propagate_tube_grid(loop, model, run_cfg, shapes, slide_grid);
    } catch (const Error& e) {
      report.failures.push_back("propagation at rtol " + std::to_string(rtol) +
                                ": " + e.what());
      continue;
    }

    std::vector<ConvergenceRow> rows(counts.size());
    for (std::size_t ci = 0; ci < counts.size(); ++ci)
      rows[ci] = {counts[ci], rtol, 0.0};

    for (std::size_t i = 0; i < shapes.size(); ++i) {
      for (std::size_t j = 0; j < slide_grid.size(); ++j) {
        const TubeSlice& slice = slices[i][j];
        for (std::size_t ci = 0; ci < counts.size(); ++ci) {
          const int count = counts[ci];
          if (count < 8 || loop.N % count != 0) {
            report.failures.push_back("sample count " + std::to_string(count) +
                                      " does not divide N");
            continue;
          }
          try {
            const TubeSlice sub = subsample(slice, count);
            const TubeSlice base_sub = subsample(base, count);
            const double value =
                poincare_cartan_integral(sub, model, options.scheme);
            const double base_value =
                poincare_cartan_integral(base_sub, model, options.scheme);
            const double rel = std::abs(value - base_value) /
                               std::max(std::abs(base_value), 1e-12);
            rows[ci].max_rel_drift = std::max(rows[ci].max_rel_drift, rel);

            if (count == loop.N && primary) {
              DriftEntry entry;
              entry.tau_label = tau_shapes[i].label;
              entry.slide = slide_grid[j];
              entry.value = value;
              entry.rel_drift = std::abs(value - report.base_value) / denom;
              if (report.base_has_linear && slice_synchronous(slice)) {
                entry.linear = poincare_linear_integral(slice, model, 1e-9,
                                                        options.scheme);
                entry.has_linear = true;
                report.has_linear_drift = true;
                report.max_linear_drift =
                    std::max(report.max_linear_drift,
                             std::abs(entry.linear - report.base_linear) /
                                 denom_lin);
              }
              report.max_rel_drift =
                  std::max(report.max_rel_drift, entry.rel_drift);
              report.entries.push_back(entry);
            }
          } catch (const Error& e) {
            report.failures.push_back(
                tau_shapes[i].label + " slide " +
                std::to_string(slide_grid[j]) + " N " + std::to_string(count) +
                ": " + e.what());
          }
        }
      }
    }
    report.convergence.insert(report.convergence.end(), rows.begin(),
                              rows.end());
  }
  return report;
}

}  // namespace nhmech
