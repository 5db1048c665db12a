#include <doctest.h>

#include <algorithm>

#include "tdbsde/analysis.hpp"
#include "tdbsde/presets.hpp"

using namespace tdbsde;

namespace {

const WeightFunction kOne = WeightFunction::constant(1.0, 1.0);
const DelayMeasure kD0 = DelayMeasure::dirac(1.0, 0.0);

bool has_prefix(const std::vector<std::string>& ws, const std::string& prefix) {
  return std::any_of(ws.begin(), ws.end(), [&](const std::string& w) { return w.rfind(prefix, 0) == 0; });
}

const AssumptionResult& find(const std::vector<AssumptionResult>& rs, const std::string& id) {
  for (const auto& r : rs)
    if (r.id == id) return r;
  throw std::runtime_error("missing " + id);
}

}  // namespace

TEST_CASE("plain contraction exactly at the boundary") {
  const auto r = check_contraction(0.2, kD0, kD0, kOne, kOne);
  CHECK(std::abs(r.lhs_y - 1.0 / 25) <= 1e-15);
  CHECK(std::abs(r.lhs_z - 1.0 / 25) <= 1e-15);
  CHECK(r.satisfied);
  CHECK(r.threshold == 1.0 / 25);
  CHECK(r.modulus == doctest::Approx(0.8));
  CHECK(has_prefix(r.warnings, "boundary:"));
}

TEST_CASE("reflected threshold is 1/36") {
  const auto r = check_contraction(1.0 / 6, kD0, kD0, kOne, kOne, Variant::reflected);
  CHECK(r.threshold == 1.0 / 36);
  CHECK(r.satisfied);
  CHECK(r.modulus == doctest::Approx(1.0));
  CHECK(has_prefix(r.warnings, "boundary:"));
  CHECK(has_prefix(r.warnings, "modulus >= 1"));
  CHECK_FALSE(check_contraction(0.2, kD0, kD0, kOne, kOne, Variant::reflected).satisfied);
}

TEST_CASE("contraction with general measures and weights") {
  const auto u = WeightFunction::polynomial(1.0, {0.0, 2.0});  // |u|_L1 = 1
  const auto v = WeightFunction::constant(1.0, 0.5);           // |v|^2_L2 = 1/4
  const auto r = check_contraction(0.12, DelayMeasure::uniform(1.0, 2.0), kD0.scaled(3.0), u, v);
  CHECK(r.lhs_y == doctest::Approx(0.0144 * 4 * 1));
  CHECK(r.lhs_z == doctest::Approx(0.0144 * 9 * 0.25));
  CHECK_FALSE(r.satisfied);
  CHECK(r.warnings.empty());
  const auto ok = check_contraction(0.05, kD0, kD0, kOne, kOne);
  CHECK(ok.satisfied);
  CHECK(ok.warnings.empty());
  CHECK(ok.modulus == doctest::Approx(0.05));
  CHECK_THROWS_AS(check_contraction(-1.0, kD0, kD0, kOne, kOne), UsageError);
  CHECK_THROWS_AS(check_contraction(0.1, DelayMeasure::dirac(2.0, 0.0), kD0, kOne, kOne), UsageError);
}

TEST_CASE("contraction is monotone in K") {
  double prev = -1.0;
  for (double K = 0.0; K <= 1.0; K += 0.05) {
    const auto r = check_contraction(K, DelayMeasure::uniform(1.0), kD0, kOne, kOne);
    CHECK(r.lhs_y + r.lhs_z >= prev);
    prev = r.lhs_y + r.lhs_z;
  }
}

TEST_CASE("bounds") {
  CHECK(apriori_bound(0.2, kD0, kD0, kOne, kOne, 0.5, 1.0, 2.0) ==
        doctest::Approx(20 * 0.04 * 1.0 + 10 * 0.5 + 20 * 0.04 * 2.0));
  CHECK(apriori_bound(0.0, kD0, kD0, kOne, kOne, 0.3, 7.0, 9.0) == doctest::Approx(3.0));
  CHECK(stability_bound(0.2, kOne, kOne, 0.5, 0.25, 1.0, 2.0) ==
        doctest::Approx(100 * 0.04 * (0.25 * 1.0 + 0.0625 * 2.0)));
  CHECK(stability_bound(0.2, kOne, kOne, 0.0, 0.0, 1.0, 2.0) == 0.0);
  CHECK_THROWS_AS(apriori_bound(0.2, kD0, kD0, kOne, kOne, -1.0, 0, 0), UsageError);
  CHECK_THROWS_AS(stability_bound(0.2, kOne, kOne, -0.1, 0, 0, 0), UsageError);
}

TEST_CASE("secant sampling respects the declared constant") {
  const auto g = presets::linear(0.3, -0.4);
  const auto s = sample_secant_slope(g, 1.0, 2000);
  CHECK(s.pairs == 2000);
  CHECK(s.max_slope <= g.lipschitz_k * (1 + 1e-9));
  CHECK(s.max_slope > 0.2);
}

TEST_CASE("assumption validator") {
  const auto g = presets::counterexample();
  const auto spec = kD0.spec();
  Eigen::MatrixXd xi = Eigen::MatrixXd::Ones(20, 1);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(20, 5);
  AssumptionInputs in;
  in.alpha1 = &spec;
  in.alpha2 = &spec;
  in.u = &kOne;
  in.v = &kOne;
  in.generator = &g;
  in.terminal_samples = &xi;
  in.terminal_bound = 1.0;
  in.barrier_samples = &S;
  const auto rs = validate_assumptions(in);
  CHECK(rs.size() == 12);
  for (const char* id : {"A1", "A2", "A3", "A4", "A5", "B1", "B4", "B6"})
    CHECK_MESSAGE(find(rs, id).verdict == Verdict::pass, (std::string(id) + ": " + find(rs, id).message));
  CHECK(find(rs, "B2").verdict == Verdict::not_checked);
  // The (B) growth bounds hold uniformly in y, which a linear y-term breaks;
  // the counterexample driver also decreases in y.
  CHECK(find(rs, "B3").verdict == Verdict::fail);
  CHECK(find(rs, "B5").verdict == Verdict::fail);
  CHECK(find(rs, "B7").verdict == Verdict::fail);

  SUBCASE("atom outside the support") {
    const MeasureSpec bad{{{0.5, 1.0}}, {}};
    in.alpha1 = &bad;
    const auto r = find(validate_assumptions(in), "A1");
    CHECK(r.verdict == Verdict::fail);
    CHECK(r.message.find("outside") != std::string::npos);
  }
  SUBCASE("barrier above the terminal value") {
    S(7, 4) = 2.0;
    const auto r = find(validate_assumptions(in), "A5");
    CHECK(r.verdict == Verdict::fail);
    CHECK(r.message.find("path 7") != std::string::npos);
  }
  SUBCASE("understated Lipschitz constant") {
    auto g2 = presets::linear(1.0, 0.0);
    g2.lipschitz_k = 0.5;
    in.generator = &g2;
    CHECK(find(validate_assumptions(in), "A3").verdict == Verdict::fail);
  }
  SUBCASE("quadratic driver is not globally Lipschitz") {
    const auto q = presets::quadratic(0.25, 0.1);
    in.generator = &q;
    CHECK(find(validate_assumptions(in), "A3").verdict == Verdict::fail);
  }
  SUBCASE("bounded-in-y quadratic driver meets the one-dimensional conditions") {
    GeneratorSpec q{"q", 1, 1, 1.0, GrowthClass::quadratic,
                    [](double, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const Eigen::MatrixXd&) {
                      return Eigen::MatrixXd(0.5 * z.array().square() + 0.5 * y.array().tanh());
                    }};
    in.generator = &q;
    const auto r2 = validate_assumptions(in);
    CHECK(find(r2, "B3").verdict == Verdict::pass);
    CHECK(find(r2, "B7").verdict == Verdict::pass);
    CHECK(find(r2, "B5").verdict == Verdict::fail);
  }
  SUBCASE("terminal bound exceeded") {
    xi(0, 0) = 3.0;
    CHECK(find(validate_assumptions(in), "B4").verdict == Verdict::fail);
  }
  SUBCASE("non-finite terminal") {
    xi(1, 0) = NAN;
    const auto r2 = validate_assumptions(in);
    CHECK(find(r2, "A4").verdict == Verdict::fail);
    CHECK(find(r2, "B6").verdict == Verdict::fail);
  }
}

TEST_CASE("validator with nothing supplied") {
  const auto rs = validate_assumptions(AssumptionInputs{});
  for (const auto& r : rs) CHECK_MESSAGE(r.verdict == Verdict::not_checked, r.id);
}
