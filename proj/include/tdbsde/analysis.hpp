#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdbsde/core.hpp"

namespace tdbsde {

enum class Variant { plain, reflected };

/// Contraction condition for the Picard map of a delayed equation.
///   lhs_y = K^2 alpha1([-T,0])^2 |u|_{L1}^2,  lhs_z = K^2 alpha2([-T,0])^2 |v|_{L2}^2
/// Plain equations need both <= 1/25 and contract with factor 10 (lhs_y + lhs_z);
/// reflected equations need 1/36 and contract with 18 (lhs_y + lhs_z).
struct ContractionReport {
  Variant variant = Variant::plain;
  double lhs_y = 0.0;
  double lhs_z = 0.0;
  double threshold = 0.0;
  bool satisfied = false;
  double modulus = 0.0;
  std::vector<std::string> warnings;
};

inline constexpr double kBoundaryTolerance = 1e-12;

double contraction_threshold(Variant v);
double contraction_factor(Variant v);

ContractionReport check_contraction(double K, const DelayMeasure& alpha1, const DelayMeasure& alpha2,
                                    const WeightFunction& u, const WeightFunction& v,
                                    Variant variant = Variant::plain);

/// Bound on |Y - Ybar|^2_S2 + |Z - Zbar|^2_H2 for two equations whose drivers
/// are frozen at (y, z) and (ybar, zbar):
///   20 K^2 a1^2 |u|_L1^2 ydiff + 10 xidiff + 20 K^2 a2^2 |v|_L2^2 zdiff.
double apriori_bound(double K, const DelayMeasure& alpha1, const DelayMeasure& alpha2,
                     const WeightFunction& u, const WeightFunction& v, double xi_diff_l2sq,
                     double y_diff_s2sq, double z_diff_h2sq);

/// Bound on |Y^n - Y|^2_S2 + |Z^n - Z|^2_H2 when the delay measures differ by
/// the given total-mass gaps:
///   100 K^2 (gapY^2 |u|_L1^2 |Y|^2_S2 + gapZ^2 |v|_L2^2 |Z|^2_H2).
double stability_bound(double K, const WeightFunction& u, const WeightFunction& v,
                       double mass_gap_y, double mass_gap_z, double y_s2sq, double z_h2sq);

enum class Verdict { pass, fail, not_checked };

std::string to_string(Verdict v);

struct AssumptionResult {
  std::string id;  // A1..A5, B1..B7
  Verdict verdict = Verdict::not_checked;
  std::string message;
};

/// Everything the validator may look at. Null members are reported as
/// not-checked.
struct AssumptionInputs {
  double horizon = 1.0;
  const MeasureSpec* alpha1 = nullptr;
  const MeasureSpec* alpha2 = nullptr;
  const WeightFunction* u = nullptr;
  const WeightFunction* v = nullptr;
  const GeneratorSpec* generator = nullptr;
  const Eigen::MatrixXd* terminal_samples = nullptr;  // M x m
  std::optional<double> terminal_bound;
  const Eigen::MatrixXd* barrier_samples = nullptr;   // M x (N+1), m = 1
  std::uint64_t seed = 0x5eed;
};

struct SecantSample {
  double max_slope = 0.0;
  int pairs = 0;
};

/// Largest |g(t,y,z) - g(t,y',z')| / (|y-y'| + |z-z'|) over random pairs in the
/// box of the given radius. A smoke test, not a proof of the Lipschitz bound.
SecantSample sample_secant_slope(const GeneratorSpec& g, double horizon, int pairs = 10000,
                                 double radius = 10.0, std::uint64_t seed = 0x5eed);

std::vector<AssumptionResult> validate_assumptions(const AssumptionInputs& in);

}  // namespace tdbsde
