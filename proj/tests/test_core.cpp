#include <doctest.h>

#include <cmath>

#include "oracles/brownian.hpp"
#include "oracles/quadrature.hpp"
#include "tdbsde/core.hpp"
#include "tdbsde/simulate.hpp"

using namespace tdbsde;

TEST_CASE("grid nodes and floor index") {
  const TimeGrid g(1.0, 10);
  CHECK(g.dt() == doctest::Approx(0.1));
  CHECK(g.node(10) == 1.0);
  CHECK(g.nodes().size() == 11);
  CHECK(g.floor_index(0.3) == 3);
  CHECK(g.floor_index(0.2999999999999) == 3);
  CHECK(g.floor_index(0.35) == 3);
  CHECK(g.floor_index(-0.01) == -1);
  CHECK(g.floor_index(5.0) == 10);
}

TEST_CASE("grid rejects infinite and degenerate horizons") {
  CHECK_THROWS_AS(TimeGrid(INFINITY, 10), UsageError);
  CHECK_THROWS_AS(TimeGrid(0.0, 10), UsageError);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), UsageError);
  try {
    TimeGrid(INFINITY, 4);
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("finite") != std::string::npos);
  }
}

TEST_CASE("measure masses") {
  const auto d0 = DelayMeasure::dirac(1.0, 0.0);
  const auto dm1 = DelayMeasure::dirac(1.0, -1.0, 2.0);
  const auto u = DelayMeasure::uniform(1.0, 3.0);
  CHECK(d0.total_mass() == 1.0);
  CHECK(dm1.total_mass() == 2.0);
  CHECK(u.total_mass() == doctest::Approx(3.0));
  CHECK(u.mass(-0.5, 0.0) == doctest::Approx(1.5));
  CHECK(u.density_mass(-0.25, -0.125) == doctest::Approx(0.375));
  CHECK(dm1.mass(-1.0, -1.0) == 2.0);
  CHECK(dm1.mass(-0.9, 0.0) == 0.0);
  CHECK(dm1.tail_mass(0.0) == 2.0);
  CHECK(dm1.tail_mass(0.5) == 0.0);
  CHECK(u.scaled(0.5).total_mass() == doctest::Approx(1.5));
  CHECK(DelayMeasure::zero(1.0).total_mass() == 0.0);
}

TEST_CASE("measure defects are reported") {
  CHECK(measure_defect(1.0, {{{0.5, 1.0}}, {}}).has_value());
  CHECK(measure_defect(1.0, {{{-1.5, 1.0}}, {}}).has_value());
  CHECK(measure_defect(1.0, {{{-0.5, -1.0}}, {}}).has_value());
  CHECK(measure_defect(1.0, {{}, {{-1.0, 0.0}, {1.0, 2.0}}}).has_value());
  CHECK(measure_defect(1.0, {{}, {{-0.5, -0.7}, {1.0}}}).has_value());
  CHECK(measure_defect(1.0, {{}, {{-1.0, -0.5, 0.0}, {1.0, -1.0}}}).has_value());
  CHECK_FALSE(measure_defect(1.0, {{{-1.0, 1.0}, {0.0, 0.5}}, {{-1.0, 0.0}, {2.0}}}).has_value());
  CHECK_THROWS_AS(DelayMeasure(1.0, {{{0.5, 1.0}}, {}}), DataError);
}

TEST_CASE("measure ordering") {
  const auto d0 = DelayMeasure::dirac(1.0, 0.0);
  CHECK(compare_measures(d0, d0) == MeasureOrder::equal);
  CHECK(compare_measures(d0.scaled(0.5), d0) == MeasureOrder::less_equal);
  CHECK(compare_measures(d0, d0.scaled(0.5)) == MeasureOrder::greater_equal);
  CHECK(compare_measures(DelayMeasure::dirac(1.0, -1.0), d0) == MeasureOrder::unordered);
  CHECK(compare_measures(DelayMeasure::uniform(1.0, 0.5), DelayMeasure::uniform(1.0, 1.0)) ==
        MeasureOrder::less_equal);
  const DelayMeasure step(1.0, {{}, {{-1.0, -0.5, 0.0}, {1.0, 0.0}}});
  CHECK(compare_measures(step, DelayMeasure::uniform(1.0, 0.5)) == MeasureOrder::unordered);
}

TEST_CASE("weight norms agree with adaptive quadrature") {
  const double T = 1.3;
  const std::vector<WeightFunction> ws{
      WeightFunction::constant(T, -2.0),
      WeightFunction::cosine(T, 1.7, 0.45),
      WeightFunction::polynomial(T, {1.0, -3.0, 2.0}),
      WeightFunction::tabulated(T, {0.0, 0.4, 0.9, 1.3}, {1.0, -0.5, 2.0, 0.0}),
  };
  for (const auto& w : ws) {
    const auto n = weight_norms(w);
    const double l1 = oracle::simpson([&](double t) { return std::abs(w(t)); }, 0.0, T, 1e-14);
    const double l2 = oracle::simpson([&](double t) { return w(t) * w(t); }, 0.0, T, 1e-14);
    CHECK(n.l1 == doctest::Approx(l1).epsilon(1e-10));
    CHECK(n.l2sq == doctest::Approx(l2).epsilon(1e-10));
  }
}

TEST_CASE("weight construction errors") {
  CHECK_THROWS_AS(WeightFunction::cosine(1.0, 1.0, 0.0), UsageError);
  CHECK_THROWS_AS(WeightFunction::tabulated(1.0, {0.0}, {1.0}), DataError);
  CHECK_THROWS_AS(WeightFunction::tabulated(1.0, {0.0, 0.5}, {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(WeightFunction::tabulated(1.0, {0.0, 0.6, 0.5, 1.0}, {1, 2, 3, 4}), DataError);
  CHECK_THROWS_AS(WeightFunction::constant(1.0, NAN), DataError);
}

TEST_CASE("empirical S2 norm of Brownian motion matches an independent simulation") {
  const TimeGrid g(1.0, 50);
  const auto paths = simulate_brownian(g, 1, 40000, {7, 0});
  Ensemble e(paths, 1);
  e.Y = paths->W;
  const auto lib = s2_estimate(e);
  const auto ref = oracle::sup_square_of_brownian(1.0, 50, 40000, 99);
  const double se = std::hypot(lib.std_error, ref.std_error);
  CHECK(std::abs(lib.value - ref.mean) <= 4 * se);
  // E[sum W_i^2 dt] over the N left nodes is T^2/2 - T dt / 2.
  Ensemble z(paths, 1);
  for (int i = 0; i < 50; ++i) z.Z[i] = paths->W[i];
  const auto h2 = h2_estimate(z);
  CHECK(std::abs(h2.value - (0.5 - 0.01)) <= 4 * h2.std_error);
}

TEST_CASE("difference norms vanish on identical ensembles") {
  const auto paths = simulate_brownian(TimeGrid(1.0, 8), 1, 100, {1, 0});
  Ensemble a(paths, 1);
  a.Y = paths->W;
  CHECK(empirical_s2_norm(a, a) == 0.0);
  CHECK(empirical_h2_norm(a, a) == 0.0);
  const auto other = simulate_brownian(TimeGrid(1.0, 4), 1, 100, {1, 0});
  CHECK_THROWS_AS(empirical_s2_norm(a, Ensemble(other, 1)), UsageError);
  CHECK_THROWS_AS(empirical_s2_norm(Ensemble{}), UsageError);
}

TEST_CASE("zero extension before time zero") {
  const auto paths = simulate_brownian(TimeGrid(1.0, 4), 1, 10, {3, 0});
  Ensemble e(paths, 1);
  for (auto& y : e.Y) y.setConstant(2.0);
  for (auto& z : e.Z) z.setConstant(3.0);
  CHECK(e.Y_at(-0.1).isZero());
  CHECK(e.Y_at(0.3).isConstant(2.0));
  CHECK(e.Z_at(-1e-3).isZero());
  CHECK(e.Z_at(1.0).isZero());
  CHECK(e.Z_at(0.99).isConstant(3.0));
}

TEST_CASE("generator baseline") {
  GeneratorSpec g;
  g.eval = [](double t, const Eigen::MatrixXd& y, const Eigen::MatrixXd&, const Eigen::MatrixXd&) {
    return Eigen::MatrixXd(y.array() + t);
  };
  CHECK(g.baseline(0.25)(0) == 0.25);
  GeneratorSpec none;
  CHECK_THROWS_AS(none.baseline(0.0), UsageError);
}
