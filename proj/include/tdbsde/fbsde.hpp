#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tdbsde/solver.hpp"

namespace tdbsde {

/// Delay in the value process only, written as a coupled system
///   X_t = int_0^t Y_s ds,  Y_t = xi + int_t^T g(s, X_s, Z_s) ds - int_t^T Z_s dW_s.
/// The generator's first argument slot carries X instead of a delay integral.
struct CoupledProblem {
  TimeGrid grid;
  GeneratorSpec generator;
  TerminalSpec terminal;
  BasisSpec basis;

  int m() const noexcept { return generator.m; }
  int d() const noexcept { return generator.d; }
};

struct FbsdeOptions {
  Index paths = 10000;
  RngSpec rng;
  double tol = 1e-4;
  int max_iter = 50;
  // |g dt| is capped at this value inside a sweep.
  double clamp = 1e3;
};

struct FbsdeResult {
  Ensemble ensemble;  // X filled
  PicardTrace trace;
  Estimate y0;
  long clamp_activations = 0;  // in the final sweep
  double forward_residual = 0.0;
  bool valid = false;          // converged with no clamp activations
  std::vector<std::string> warnings;
};

/// Forward-backward Picard iteration: X^k from Y^{k-1}, then one backward
/// sweep with state (W, X^k) and driver g(t_i, X^k_i, Z_i). Throws
/// DivergenceError if the iterate difference grows three times in a row.
FbsdeResult solve_fbsde(const CoupledProblem& problem, const FbsdeOptions& options);
FbsdeResult solve_fbsde(const CoupledProblem& problem, std::shared_ptr<const Paths> paths,
                        const FbsdeOptions& options);

struct BmoReport {
  // Per node i = 0..N: mean and max over paths of E[sum_{j>=i} |Z_j|^2 dt | F_{t_i}].
  std::vector<double> node_mean;
  std::vector<double> node_max;
  double bmo_sq = 0.0;
  double z_infty = 0.0;
};

BmoReport bmo_diagnostic(const Ensemble& ensemble, const BasisSpec& basis);

struct EquivalenceReport {
  double s2_diff = 0.0;  // |Y^delay - Y^fbsde|_S2 (not squared)
  double h2_diff = 0.0;
  double tolerance = 0.02;
  bool passed = false;
  Estimate delayed_y0;
  Estimate fbsde_y0;
  PicardTrace delayed_trace;
  PicardTrace fbsde_trace;
  ContractionReport report;
  std::vector<std::string> warnings;
};

/// The delayed problem must use alpha1 = uniform density 1 on [-T, 0],
/// alpha2 = delta_0 and unit weights; then gamma_y(t) = int_0^t Y and both
/// solvers target the same equation. Both run on the same Brownian paths.
EquivalenceReport equivalence_check(const DelayedProblem& delayed, const SolveOptions& options);

CoupledProblem coupled_from_delayed(const DelayedProblem& delayed);

}  // namespace tdbsde
