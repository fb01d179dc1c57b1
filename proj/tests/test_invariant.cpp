#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nhmech/errors.hpp"
#include "nhmech/invariant.hpp"
#include "nhmech/models.hpp"
#include "nhmech/scenario.hpp"

using Eigen::VectorXd;
using namespace nhmech;

namespace {

IntegratorConfig tight(double rtol = 1e-10) {
  IntegratorConfig cfg;
  cfg.rtol = rtol;
  cfg.atol = rtol * 1e-2;
  return cfg;
}

LoopSpec oscillator_circle(double r, int N) {
  LoopSpec loop;
  loop.N = N;
  loop.base = [r](double s) {
    PhaseState p;
    p.t = 0.0;
    p.x = VectorXd::Constant(1, r * std::cos(2.0 * M_PI * s));
    p.ystar = VectorXd::Constant(1, r * std::sin(2.0 * M_PI * s));
    return p;
  };
  return loop;
}

LoopSpec model_loop(const ModelDescriptor& desc, double rx, double ry, int N,
                    double time_amplitude = 0.0) {
  ScenarioConfig cfg;
  cfg.loop.present = true;
  cfg.loop.radii_x = VectorXd::Constant(desc.n, rx);
  cfg.loop.radii_ystar = VectorXd::Constant(desc.m, ry);
  cfg.loop.samples = N;
  cfg.loop.time_amplitude = time_amplitude;
  return scenario_loop(cfg, desc);
}

const TauFn kHold = [](double) { return 0.0; };

}  // namespace

TEST_CASE("a degenerate loop integrates to zero") {
  const auto osc = get_model("harmonic_oscillator");
  LoopSpec point;
  point.N = 16;
  point.base = [](double) {
    PhaseState p;
    p.t = 0.0;
    p.x = VectorXd::Constant(1, 0.4);
    p.ystar = VectorXd::Constant(1, -0.2);
    return p;
  };
  const TubeSlice slice = propagate_tube(point, osc.model, tight(), kHold);
  CHECK(poincare_cartan_integral(slice, osc.model) == 0.0);
  CHECK(poincare_linear_integral(slice, osc.model) == 0.0);
}

TEST_CASE("the oscillator circle has signed area -pi r^2") {
  const auto osc = get_model("harmonic_oscillator");
  const TubeSlice base =
      propagate_tube(oscillator_circle(1.0, 256), osc.model, tight(), kHold);
  const double central = poincare_cartan_integral(base, osc.model);
  CHECK(std::abs(central - (-M_PI)) < 1e-6);
  const double spectral =
      poincare_cartan_integral(base, osc.model, TangentScheme::fft);
  CHECK(std::abs(spectral - (-M_PI)) < 1e-12);
}

TEST_CASE("zero slide returns the base loop exactly") {
  const auto kn = get_model("knife_edge");
  const LoopSpec loop = model_loop(kn, 0.1, 0.1, 32);
  const TubeSlice slice = propagate_tube(loop, kn.model, tight(), kHold);
  for (int k = 0; k < 32; ++k) {
    const PhaseState p = loop.base(static_cast<double>(k) / 32);
    CHECK((slice.points[k].x - p.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((slice.points[k].ystar - p.ystar).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("a full oscillator period returns the loop to itself") {
  const auto osc = get_model("harmonic_oscillator");
  const LoopSpec loop = oscillator_circle(0.8, 32);
  const TubeSlice slice = propagate_tube(
      loop, osc.model, tight(1e-11), [](double) { return 2.0 * M_PI; });
  for (int k = 0; k < 32; ++k) {
    const PhaseState p = loop.base(static_cast<double>(k) / 32);
    CHECK((slice.points[k].x - p.x).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((slice.points[k].ystar - p.ystar).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("the Cartan integral is invariant along oscillator tubes") {
  const auto osc = get_model("harmonic_oscillator");
  const LoopSpec loop = oscillator_circle(1.0, 64);
  const TubeSlice base = propagate_tube(loop, osc.model, tight(), kHold);
  const double i0 =
      poincare_cartan_integral(base, osc.model, TangentScheme::fft);
  for (const TauFn& tau :
       {TauFn{[](double) { return 1.7; }},
        TauFn{[](double s) { return 1.0 + 0.5 * std::sin(2.0 * M_PI * s); }}}) {
    const TubeSlice slice = propagate_tube(loop, osc.model, tight(), tau);
    const double i1 =
        poincare_cartan_integral(slice, osc.model, TangentScheme::fft);
    CHECK(std::abs(i1 - i0) / M_PI < 1e-7);
  }
}

TEST_CASE("synchronous slices make the Cartan and linear integrals identical") {
  const auto kn = get_model("knife_edge");
  const LoopSpec loop = model_loop(kn, 0.15, 0.15, 64);
  const TubeSlice slice = propagate_tube(loop, kn.model, tight(),
                                         [](double) { return 1.25; });
  const double cartan = poincare_cartan_integral(slice, kn.model);
  const double linear = poincare_linear_integral(slice, kn.model);
  CHECK(cartan == linear);  // bitwise, Omega_0 = 0 exactly
}

TEST_CASE("the linear integral requires simultaneous states") {
  const auto osc = get_model("harmonic_oscillator");
  const LoopSpec loop = model_loop(osc, 0.5, 0.5, 32, 0.1);
  const TubeSlice slice = propagate_tube(loop, osc.model, tight(), kHold);
  CHECK_THROWS_AS(poincare_linear_integral(slice, osc.model),
                  NonSimultaneousSlice);
}

TEST_CASE("reversing the loop orientation negates the integral") {
  const auto osc = get_model("harmonic_oscillator");
  const LoopSpec loop = oscillator_circle(1.0, 64);
  LoopSpec reversed;
  reversed.N = 64;
  reversed.base = [&loop](double s) { return loop.base(1.0 - s); };
  const TubeSlice a = propagate_tube(loop, osc.model, tight(), kHold);
  const TubeSlice b = propagate_tube(reversed, osc.model, tight(), kHold);
  const double ia = poincare_cartan_integral(a, osc.model);
  const double ib = poincare_cartan_integral(b, osc.model);
  CHECK(std::abs(ia + ib) < 1e-13);
}

TEST_CASE("cyclic reparametrization leaves the integral unchanged") {
  const auto osc = get_model("harmonic_oscillator");
  const LoopSpec loop = oscillator_circle(1.0, 64);
  LoopSpec shifted;
  shifted.N = 64;
  shifted.base = [&loop](double s) {
    return loop.base(std::fmod(s + 5.0 / 64.0, 1.0));
  };
  const TubeSlice a = propagate_tube(loop, osc.model, tight(), kHold);
  const TubeSlice b = propagate_tube(shifted, osc.model, tight(), kHold);
  CHECK(std::abs(poincare_cartan_integral(a, osc.model) -
                 poincare_cartan_integral(b, osc.model)) <= 1e-13);
}

TEST_CASE("fft and central tangents agree on smooth loops") {
  const auto kn = get_model("knife_edge");
  const LoopSpec loop = model_loop(kn, 0.2, 0.2, 128);
  const TubeSlice slice = propagate_tube(loop, kn.model, tight(),
                                         [](double) { return 0.8; });
  const double a = poincare_cartan_integral(slice, kn.model);
  const double b =
      poincare_cartan_integral(slice, kn.model, TangentScheme::fft);
  CHECK(std::abs(a - b) < 1e-6);
}

TEST_CASE("fft tangents insist on power-of-two sampling") {
  const auto osc = get_model("harmonic_oscillator");
  const TubeSlice slice =
      propagate_tube(oscillator_circle(1.0, 24), osc.model, tight(), kHold);
  CHECK_THROWS_AS(
      poincare_cartan_integral(slice, osc.model, TangentScheme::fft), Error);
}

TEST_CASE("grid propagation matches one-shot propagation") {
  const auto kn = get_model("knife_edge");
  const LoopSpec loop = model_loop(kn, 0.1, 0.1, 16);
  const std::vector<TauFn> shapes = {[](double) { return 1.0; },
                                     [](double s) {
                                       return 1.0 +
                                              0.5 * std::sin(2.0 * M_PI * s);
                                     }};
  const std::vector<double> slides = {0.0, 0.7, 1.4};
  const auto grid =
      propagate_tube_grid(loop, kn.model, tight(), shapes, slides);
  for (std::size_t i = 0; i < shapes.size(); ++i)
    for (std::size_t j = 0; j < slides.size(); ++j) {
      const double slide = slides[j];
      const TauFn& shape = shapes[i];
      const TubeSlice single = propagate_tube(
          loop, kn.model, tight(),
          [&](double s) { return slide * shape(s); });
      // The grid run lands on intermediate sample times, so its step
      // sequence differs; agreement is to integrator accuracy only.
      for (int k = 0; k < 16; ++k) {
        CHECK((grid[i][j].points[k].x - single.points[k].x)
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);
        CHECK((grid[i][j].points[k].ystar - single.points[k].ystar)
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);
      }
    }
}

TEST_CASE("tube spot check accepts a consistent propagation") {
  const auto osc = get_model("harmonic_oscillator");
  const TubeSlice slice =
      propagate_tube(oscillator_circle(1.0, 16), osc.model, tight(),
                     [](double) { return 1.0; }, true);
  CHECK(slice.points.size() == 16);
}

TEST_CASE("loops need a minimum sample count") {
  const auto osc = get_model("harmonic_oscillator");
  CHECK_THROWS_AS(
      propagate_tube(oscillator_circle(1.0, 4), osc.model, tight(), kHold),
      Error);
}

TEST_CASE("negative slide durations are rejected") {
  const auto osc = get_model("harmonic_oscillator");
  CHECK_THROWS_AS(propagate_tube(oscillator_circle(1.0, 16), osc.model,
                                 tight(), [](double) { return -1.0; }),
                  Error);
}

TEST_CASE("the linear integral is invariant for the linear-constraint model") {
  const auto kn = get_model("knife_edge");
  const LoopSpec loop = model_loop(kn, 0.15, 0.15, 64);
  const IntegratorConfig cfg = tight();
  const TubeSlice base = propagate_tube(loop, kn.model, cfg, kHold);
  const double i0 =
      poincare_linear_integral(base, kn.model, 1e-9, TangentScheme::fft);
  REQUIRE(std::abs(i0) > 1e-3);  // the loop is calibrated to be non-degenerate
  for (double slide : {1.0, 2.0}) {
    const TubeSlice slice = propagate_tube(loop, kn.model, cfg,
                                           [slide](double) { return slide; });
    const double i1 =
        poincare_linear_integral(slice, kn.model, 1e-9, TangentScheme::fft);
    CHECK(std::abs(i1 - i0) / std::abs(i0) < 1e-8);
  }
}

TEST_CASE("drift report aggregates values, convergence and failures") {
  const auto kn = get_model("knife_edge");
  const LoopSpec loop = model_loop(kn, 0.1, 0.1, 32);
  std::vector<TauShape> shapes = {make_tau_shape("const"),
                                  make_tau_shape("sin")};
  DriftOptions options;
  options.sample_counts = {8, 16, 32};
  options.rtol_values = {1e-6, 1e-9};
  const DriftReport report = drift_report(loop, kn.model, tight(), shapes,
                                          {0.0, 0.5, 1.0}, options);
  CHECK(report.failures.empty());
  CHECK(report.base_has_linear);
  CHECK(report.entries.size() == 6);  // 2 shapes x 3 slides at full N
  // 3 counts x (2 requested rtols + the configured one, prepended).
  CHECK(report.convergence.size() == 9);
  CHECK(report.max_rel_drift < 1e-4);
  for (const auto& entry : report.entries) {
    if (entry.slide == 0.0) CHECK(entry.rel_drift == 0.0);
    CHECK(std::isfinite(entry.value));
  }
}

TEST_CASE("per-slice integration failures land in the report") {
  const auto kn = get_model("knife_edge");
  const LoopSpec loop = model_loop(kn, 0.1, 0.1, 16);
  IntegratorConfig cramped = tight();
  cramped.max_steps = 3;  // cannot reach any positive slide
  std::vector<TauShape> shapes = {make_tau_shape("const")};
  const DriftReport report =
      drift_report(loop, kn.model, cramped, shapes, {0.0, 1.0});
  CHECK(!report.failures.empty());
}
