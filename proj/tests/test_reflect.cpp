#include <doctest.h>

#include <cmath>

#include "oracles/stopping.hpp"
#include "tdbsde/presets.hpp"
#include "tdbsde/reflect.hpp"
#include "tdbsde/simulate.hpp"

using namespace tdbsde;

namespace {

DelayedProblem make(int steps, GeneratorSpec g, TerminalSpec xi) {
  return {TimeGrid(1.0, steps),
          std::move(g),
          std::move(xi),
          DelayMeasure::dirac(1.0, 0.0),
          DelayMeasure::dirac(1.0, 0.0),
          WeightFunction::constant(1.0, 1.0),
          WeightFunction::constant(1.0, 1.0),
          BasisSpec{}};
}

SolveOptions opts(Index paths, std::uint64_t seed = 1) {
  SolveOptions o;
  o.paths = paths;
  o.rng = {seed, 0};
  return o;
}

double put(double t, double w) {
  return std::exp(-0.2 * t) * std::max(0.0, 1.1 - std::exp(0.5 * w + (0.2 - 0.125) * t));
}

}  // namespace

TEST_CASE("non-binding barrier reproduces the plain solution") {
  const auto p = make(20, presets::zero(), presets::brownian_terminal(1.0));
  const auto paths = simulate_brownian(p.grid, 1, 4000, {2, 0});
  const auto r = solve_reflected(p, Barrier::constant(-1e6), paths, opts(4000));
  const auto s = solve(p, paths, opts(4000));
  CHECK(r.solution.K.isZero(0.0));
  CHECK(r.audit.passed);
  for (int i = 0; i <= 20; ++i)
    CHECK((r.solution.ensemble.Y[i] - s.ensemble.Y[i]).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(r.y0.value - s.y0.value) < 0.01);
}

TEST_CASE("dominating continuation keeps K at zero") {
  const auto p = make(10, presets::zero(), presets::constant_terminal(2.0));
  const auto r = solve_reflected(p, Barrier::constant(1.0), opts(500));
  CHECK(r.solution.K.isZero(0.0));
  for (const auto& y : r.solution.ensemble.Y) CHECK((y.array() - 2.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("binding put barrier satisfies the reflected invariants") {
  const auto p = make(20, presets::zero(), presets::put_terminal(1.1, 0.5, 0.2));
  const auto r = solve_reflected(p, presets::put_barrier(1.1, 0.5, 0.2), opts(20000));
  CHECK(r.audit.passed);
  CHECK(r.audit.max_sum <= kSkorokhodTolerance);
  CHECK(r.audit.min_gap >= 0.0);
  CHECK(r.audit.min_increment >= 0.0);
  CHECK(r.solution.K.col(0).isZero(0.0));
  CHECK(r.solution.K.col(20).maxCoeff() > 0.0);
  for (int i = 0; i <= 20; ++i)
    CHECK((r.solution.ensemble.Y[i].col(0) - r.solution.S.col(i)).minCoeff() >= 0.0);
}

TEST_CASE("uniform delay with gamma_y / 6 and a binding barrier") {
  auto p = make(20, presets::linear(1.0 / 6, 0.0), presets::put_terminal(1.1, 0.5, 0.2));
  p.alpha1 = DelayMeasure::uniform(1.0);
  const auto r = solve_reflected(p, presets::put_barrier(1.1, 0.5, 0.2), opts(10000));
  CHECK(r.report.satisfied);
  CHECK(r.report.threshold == 1.0 / 36);
  CHECK(r.trace.converged);
  CHECK(r.audit.passed);
  for (double q : r.trace.ratios(1e-20)) CHECK(q <= r.report.modulus + 0.1);
}

TEST_CASE("raising the barrier never lowers Y") {
  auto p = make(16, presets::zero(), presets::put_terminal(1.1, 0.5, 0.2));
  const auto paths = simulate_brownian(p.grid, 1, 3000, {6, 0});
  const Barrier low = presets::put_barrier(1.1, 0.5, 0.2);
  Barrier high{"raised", [&](const Paths& ps, int i) {
                 Eigen::VectorXd s = low.eval(ps, i);
                 if (i < ps.grid.steps()) s.array() += 0.05;
                 return s;
               }};
  const Ensemble seed(paths, 1);
  SUBCASE("pathwise with the averaging basis") {
    p.basis.degree = 0;
    const auto a = reflected_step(p, low, seed);
    const auto b = reflected_step(p, high, seed);
    for (int i = 0; i <= 16; ++i)
      CHECK((b.ensemble.Y[i] - a.ensemble.Y[i]).minCoeff() >= -1e-12);
  }
  SUBCASE("in the mean with the default basis") {
    const auto a = reflected_step(p, low, seed);
    const auto b = reflected_step(p, high, seed);
    for (int i = 0; i <= 16; ++i) CHECK(b.ensemble.Y[i].mean() >= a.ensemble.Y[i].mean() - 1e-12);
  }
}

TEST_CASE("barrier above the terminal value is rejected") {
  const auto p = make(4, presets::zero(), presets::constant_terminal(1.0));
  try {
    solve_reflected(p, Barrier::constant(2.0), opts(10));
    FAIL("expected AssumptionError");
  } catch (const AssumptionError& e) {
    CHECK(e.assumption() == "A5");
  }
  const auto q = make(4, presets::zero(2), presets::constant_terminal(1.0, 2));
  CHECK_THROWS_AS(solve_reflected(q, Barrier::constant(0.0), opts(10)), UsageError);
}

TEST_CASE("reflected gate uses 1/36") {
  const auto p = make(4, presets::counterexample(), presets::constant_terminal(1.0));
  CHECK_THROWS_AS(solve_reflected(p, Barrier::constant(0.0), opts(10)), ContractionRefusal);
}

TEST_CASE("snell value on trivial trees") {
  TreeProblem flat{1.0, 8, [](double, double) { return 0.0; }, [](double, double) { return 0.7; },
                   [](double) { return 0.7; }};
  CHECK(snell_value(flat) == doctest::Approx(0.7));
  TreeProblem run{2.0, 10, [](double, double) { return 1.0; }, [](double, double) { return -1e6; },
                  [](double) { return 0.0; }};
  CHECK(snell_value(run) == doctest::Approx(2.0));
  run.levels = 13;
  CHECK_THROWS_AS(snell_value(run), GateRefusal);
  run.levels = 0;
  CHECK_THROWS_AS(snell_value(run), UsageError);
}

TEST_CASE("snell value equals exhaustive enumeration over stopping rules") {
  const auto driver = [](double t, double w) { return 0.3 * std::sin(3 * w) - 0.1 * t; };
  const auto barrier = [](double t, double w) { return put(t, w) + 0.05 * std::cos(w + t); };
  const auto terminal = [](double w) { return put(1.0, w); };
  const std::size_t rules[] = {0, 2, 5, 26, 677};
  for (int n = 1; n <= 4; ++n) {
    const TreeProblem tree{1.0, n, driver, barrier, terminal};
    const oracle::StoppingTree brute{1.0, n, driver, barrier, terminal};
    CHECK(brute.all_values().size() == rules[n]);
    CHECK(snell_value(tree) == brute.best());
  }
}

TEST_CASE("gaussian scheme agrees with the binomial tree on the put problem") {
  auto p = make(12, presets::zero(), presets::put_terminal(1.1, 0.5, 0.2));
  p.basis.degree = 6;
  const auto r = solve_reflected(p, presets::put_barrier(1.1, 0.5, 0.2), opts(100000));
  const TreeProblem tree{1.0, 12, [](double, double) { return 0.0; }, put,
                         [](double w) { return put(1.0, w); }};
  const double ref = snell_value(tree);
  CHECK(std::abs(r.y0.value - ref) <= 1e-2 + 3 * r.y0.std_error);
  CHECK(r.audit.passed);
}
