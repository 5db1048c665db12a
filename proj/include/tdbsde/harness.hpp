#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdbsde/solver.hpp"

namespace tdbsde {

// ---------------------------------------------------------------------------
// Stability sweep

using MeasureFamily = std::function<std::pair<DelayMeasure, DelayMeasure>(int n)>;

struct SweepRow {
  int n = 0;
  double gap_y = 0.0;  // |alpha^n_1([-T,0]) - alpha_1([-T,0])|
  double gap_z = 0.0;
  Estimate err_s2sq;
  Estimate err_h2sq;
  double bound = 0.0;
  Estimate y0;
  bool gate_ok = true;
  std::string order_y;  // relation of alpha^n_1 to alpha_1
  std::string order_z;
  std::string error;    // non-empty when this member was not solved
};

struct SweepResult {
  Estimate base_y0;
  double base_s2sq = 0.0;
  double base_h2sq = 0.0;
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;
};

/// Solves the base problem once and every family member on the same paths.
/// Members failing the contraction gate are recorded, not fatal.
SweepResult stability_sweep(const DelayedProblem& base, const MeasureFamily& family,
                            const std::vector<int>& n_list, const SolveOptions& options);

std::string to_string(MeasureOrder o);

// ---------------------------------------------------------------------------
// Counterexample

struct CurvePoint {
  double t = 0.0;
  double y = 0.0;       // delta_0 instance, path average
  double exact = 0.0;   // exp(-(1 - t) / 5)
  double ybar = 0.0;    // delta_{-1} instance, path average
};

struct CounterexampleReport {
  Estimate y0;
  Estimate ybar0;
  double max_curve_error = 0.0;   // max_i |Y_{t_i} - exp(-(1 - t_i)/5)| over paths and nodes
  double max_ybar_deviation = 0.0;  // max |Ybar - 1| over paths and nodes
  std::vector<CurvePoint> curve;
  PicardTrace trace;
  PicardTrace trace_bar;
  ContractionReport report;
  std::vector<std::string> warnings;
};

CounterexampleReport counterexample_run(Index paths, int steps, const SolveOptions& options);

// ---------------------------------------------------------------------------
// A priori estimate conformance

struct AprioriRow {
  Estimate measured;    // |Y - Ybar|^2_S2 + |Z - Zbar|^2_H2
  Estimate xi_diff;     // E|xi - xibar|^2
  double bound = 0.0;
  double combined_stderr = 0.0;
  bool passed = false;
};

/// Solves `problem` with two terminal conditions on common paths and compares
/// the difference with the a priori bound evaluated at the solutions.
AprioriRow apriori_conformance(const DelayedProblem& problem, const TerminalSpec& other,
                               const SolveOptions& options);

// ---------------------------------------------------------------------------
// Refinement

/// Continuous-time Y_0 for problems with a closed form: linear drivers with
/// delta_0 measures, unit weights and constant xi; zero driver with a Brownian
/// terminal.
std::optional<double> known_y0(const DelayedProblem& problem);

struct RefinementRow {
  int steps = 0;
  Index paths = 0;
  double rmse = 0.0;        // over replications, against the reference
  double mean_error = 0.0;
  double y0_spread = 0.0;   // max - min of Y_0 over replications
};

struct RefinementResult {
  double reference = 0.0;
  std::vector<RefinementRow> rows;
  double time_order = 0.0;  // -slope of log rmse vs log N at the largest M
  double mc_slope = 0.0;    // slope of log rmse vs log M at the largest N
};

/// Each replication simulates the finest grid once and coarsens it, so every
/// N sees the same Brownian paths. Throws GateRefusal without a reference.
RefinementResult refinement_study(const DelayedProblem& problem, const std::vector<int>& n_list,
                                  const std::vector<Index>& m_list, int replications,
                                  const SolveOptions& options,
                                  std::optional<double> reference = std::nullopt);

// Least-squares slope of log(y) on log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

DelayedProblem with_grid(const DelayedProblem& problem, int steps);

}  // namespace tdbsde
