#include <doctest.h>

#include <cmath>

#include "oracles/deflator.hpp"
#include "tdbsde/parallel.hpp"
#include "tdbsde/presets.hpp"
#include "tdbsde/simulate.hpp"
#include "tdbsde/solver.hpp"

using namespace tdbsde;

namespace {

DelayedProblem make(int steps, GeneratorSpec g, TerminalSpec xi, double T = 1.0) {
  return {TimeGrid(T, steps),
          std::move(g),
          std::move(xi),
          DelayMeasure::dirac(T, 0.0),
          DelayMeasure::dirac(T, 0.0),
          WeightFunction::constant(T, 1.0),
          WeightFunction::constant(T, 1.0),
          BasisSpec{}};
}

SolveOptions opts(Index paths, std::uint64_t seed = 1) {
  SolveOptions o;
  o.paths = paths;
  o.rng = {seed, 0};
  return o;
}

}  // namespace

TEST_CASE("martingale case: Y tracks W and Z is one") {
  const auto p = make(50, presets::zero(), presets::brownian_terminal(1.0));
  const auto sol = solve(p, opts(100000));
  CHECK(sol.trace.converged);
  CHECK(sol.trace.iteration_count() <= 2);
  double worst = 0.0;
  for (int i = 0; i <= 50; ++i)
    worst = std::max(worst, (sol.ensemble.Y[i] - sol.ensemble.paths->W[i]).cwiseAbs().mean());
  CHECK(worst <= 0.02);
  double zerr = 0.0;
  for (int i = 0; i < 50; ++i) zerr += (sol.ensemble.Z[i].array() - 1.0).abs().mean();
  CHECK(zerr / 50 <= 0.02);
  CHECK(std::abs(sol.y0.value) <= 0.02);
}

TEST_CASE("constant driver integrates deterministically") {
  const auto p = make(20, presets::linear(0.0, 0.0, 1.0), presets::constant_terminal(0.0), 2.0);
  const auto sol = solve(p, opts(500));
  for (int i = 0; i <= 20; ++i)
    CHECK((sol.ensemble.Y[i].array() - (2.0 - p.grid.node(i))).abs().maxCoeff() < 1e-12);
  for (int i = 0; i < 20; ++i) CHECK(sol.ensemble.Z[i].cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("strong delay instance stays at one") {
  const auto p = presets::counterexample_problem(100, true);
  const auto paths = simulate_brownian(p.grid, 1, 2000, {4, 0});
  const Ensemble one = picard_step(p, Ensemble(paths, 1));
  for (const auto& y : one.Y) CHECK((y.array() - 1.0).abs().maxCoeff() < 1e-12);
  const auto sol = solve(p, opts(2000));
  CHECK(sol.trace.converged);
  CHECK(std::abs(sol.y0.value - 1.0) < 1e-12);
}

TEST_CASE("counterexample with delta_0 follows exp(-(1-t)/5)") {
  const auto p = presets::counterexample_problem(50);
  const auto sol = solve(p, opts(5000));
  CHECK(sol.trace.converged);
  CHECK(sol.y0.value == doctest::Approx(std::exp(-0.2)).epsilon(0.01));
  for (int i = 0; i <= 50; ++i)
    CHECK(std::abs(sol.ensemble.Y[i].mean() - std::exp(-(1 - p.grid.node(i)) / 5)) <= 0.02);
  CHECK(sol.report.satisfied);
  for (double r : sol.trace.ratios(1e-24)) CHECK(r <= sol.report.modulus + 0.1);
}

TEST_CASE("affine driver matches the deflator oracle") {
  const double a = 0.2, b = 0.15;
  const auto p = make(50, presets::linear(a, b), presets::brownian_terminal(1.0, 1.0));
  const auto sol = solve(p, opts(50000));
  const double ref = oracle::affine_y0(a, b, 1.0, [](double w) { return 1.0 + w; });
  CHECK(ref == doctest::Approx(std::exp(a) * (1.0 + b)).epsilon(1e-9));
  CHECK(std::abs(sol.y0.value - ref) <= 0.01);
}

TEST_CASE("terminal value is reproduced exactly") {
  const auto p = make(10, presets::linear(0.1, 0.1), presets::sin_terminal(2.0, 0.3, 1.0));
  const auto sol = solve(p, opts(3000));
  const Eigen::MatrixXd xi = p.terminal.eval(*sol.ensemble.paths);
  CHECK((sol.ensemble.Y[10].array() == xi.array()).all());
}

TEST_CASE("generator ignoring the delay converges at once") {
  const auto p = make(20, presets::linear(0.0, 0.0, 0.5), presets::tanh_terminal(1.0, 0.0, 1.0));
  const auto sol = solve(p, opts(3000));
  CHECK(sol.trace.converged);
  REQUIRE(sol.trace.iteration_count() == 2);
  CHECK(sol.trace.iterations[1].total() < 1e-20);
}

TEST_CASE("gate refusal and override") {
  const auto p = make(10, presets::linear(0.5, 0.0), presets::constant_terminal(1.0));
  try {
    solve(p, opts(100));
    FAIL("expected refusal");
  } catch (const ContractionRefusal& e) {
    CHECK_FALSE(e.report().satisfied);
    CHECK(e.report().lhs_y == doctest::Approx(0.25));
  }
  auto o = opts(100);
  o.override_gate = true;
  const auto sol = solve(p, o);
  CHECK_FALSE(sol.report.satisfied);
  CHECK_FALSE(sol.warnings.empty());
  // Y' = -Y/2 backward from 1: Y_0 ~ e^{1/2} with a first-order scheme.
  CHECK(sol.y0.value == doctest::Approx(std::exp(0.5)).epsilon(0.05));
}

TEST_CASE("non-finite driver values name the first bad location") {
  auto g = presets::zero();
  g.eval = [](double t, const Eigen::MatrixXd& gy, const Eigen::MatrixXd&, const Eigen::MatrixXd&) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(gy.rows(), 1);
    if (std::abs(t - 0.4) < 1e-12) out(3, 0) = NAN;
    return out;
  };
  const auto p = make(5, g, presets::constant_terminal(1.0));
  try {
    solve(p, opts(10));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.path() == 3);
    CHECK(e.node() == 2);
  }
}

TEST_CASE("problem validation") {
  auto p = make(10, presets::zero(2), presets::constant_terminal(1.0));
  CHECK_THROWS_AS(validate_problem(p), UsageError);
  auto q = make(10, presets::zero(), presets::constant_terminal(1.0));
  q.basis.degree = -1;
  CHECK_THROWS_AS(validate_problem(q), UsageError);
  auto o = opts(10);
  o.max_iter = 0;
  CHECK_THROWS_AS(solve(make(10, presets::zero(), presets::constant_terminal(1.0)), o), UsageError);
}

TEST_CASE("results do not depend on the thread count") {
  const auto p = make(20, presets::linear(0.2, 0.1), presets::tanh_terminal(1.0, 0.0, 1.0));
  set_thread_count(1);
  const auto a = solve(p, opts(8000, 3));
  const auto b = solve(p, opts(8000, 3));
  set_thread_count(4);
  const auto c = solve(p, opts(8000, 3));
  set_thread_count(0);
  CHECK(a.y0.value == b.y0.value);
  CHECK(std::abs(a.y0.value - c.y0.value) < 1e-12);
  CHECK(a.trace.iteration_count() == c.trace.iteration_count());
}

TEST_CASE("ratios stop at the floor") {
  PicardTrace t;
  t.iterations = {{1, 1.0, 0.0}, {2, 0.5, 0.0}, {3, 0.1, 0.0}, {4, 1e-30, 0.0}, {5, 1e-31, 0.0}};
  const auto r = t.ratios(1e-20);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == doctest::Approx(0.2));
  CHECK(r[1] == doctest::Approx(1e-29));
}

TEST_CASE("augmented state solves a uniform-delay problem") {
  auto p = make(20, presets::linear(0.2, 0.0), presets::brownian_terminal(0.5, 1.0));
  p.alpha1 = DelayMeasure::uniform(1.0);
  p.basis.augment_delay_state = true;
  const auto sol = solve(p, opts(5000));
  CHECK(sol.trace.converged);
  CHECK(std::isfinite(sol.y0.value));
  p.basis.augment_delay_state = false;
  const auto plain = solve(p, opts(5000));
  CHECK(std::abs(sol.y0.value - plain.y0.value) <= 3 * plain.y0.std_error + 1e-3);
}
