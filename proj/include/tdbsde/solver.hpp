#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tdbsde/analysis.hpp"
#include "tdbsde/core.hpp"
#include "tdbsde/delay.hpp"
#include "tdbsde/regress.hpp"

namespace tdbsde {

/// Terminal condition as a functional of the whole Brownian path (so it is
/// F_T-measurable by construction). Returns M x m.
struct TerminalSpec {
  std::string name;
  int m = 1;
  std::function<Eigen::MatrixXd(const Paths&)> eval;
  // Declared sup |xi|, when the preset is bounded.
  std::optional<double> bound;
};

struct DelayedProblem {
  TimeGrid grid;
  GeneratorSpec generator;
  TerminalSpec terminal;
  DelayMeasure alpha1;
  DelayMeasure alpha2;
  WeightFunction u;
  WeightFunction v;
  BasisSpec basis;

  int m() const noexcept { return generator.m; }
  int d() const noexcept { return generator.d; }
};

// Checks dimension and horizon consistency; throws UsageError.
void validate_problem(const DelayedProblem& problem);

struct PicardIterate {
  int k = 0;
  double diff_s2sq = 0.0;
  double diff_h2sq = 0.0;
  double total() const noexcept { return diff_s2sq + diff_h2sq; }
};

struct PicardTrace {
  std::vector<PicardIterate> iterations;
  bool converged = false;

  int iteration_count() const noexcept { return static_cast<int>(iterations.size()); }
  // diff(k+1) / diff(k) for k >= 2 while diff(k) stays above `floor`.
  std::vector<double> ratios(double floor = 0.0) const;
};

struct SolveOptions {
  Index paths = 10000;
  RngSpec rng;
  double tol = 1e-4;
  int max_iter = 50;
  bool override_gate = false;
};

struct DelayedSolution {
  Ensemble ensemble;
  PicardTrace trace;
  ContractionReport report;
  Estimate y0;
  std::vector<std::string> warnings;
};

class ContractionRefusal : public GateRefusal {
 public:
  explicit ContractionRefusal(ContractionReport report);
  const ContractionReport& report() const noexcept { return report_; }

 private:
  ContractionReport report_;
};

/// Stencils for both legs of the delay operator, reused across iterations.
struct DelayOperator {
  DelayStencil y_leg;
  DelayStencil z_leg;
};

DelayOperator build_delay_operator(const DelayedProblem& problem);

/// Driver values g(t_i, gamma(t_i)) with gamma built from `prev`; throws
/// NumericalError at the first non-finite (path, node).
Eigen::MatrixXd frozen_driver(const DelayedProblem& problem, const DelayOperator& op,
                              const Ensemble& prev, int i);

/// One application of the Picard map: freeze the delay integrals at `prev`
/// and solve the resulting standard equation by a backward regression sweep.
/// The result shares prev's Brownian paths.
Ensemble picard_step(const DelayedProblem& problem, const Ensemble& prev);
Ensemble picard_step(const DelayedProblem& problem, const DelayOperator& op, const Ensemble& prev,
                     std::vector<std::string>* warnings = nullptr);

/// Picard iteration from the zero ensemble until
/// diff_s2sq + diff_h2sq <= tol^2 or max_iter.
DelayedSolution solve(const DelayedProblem& problem, const SolveOptions& options);
DelayedSolution solve(const DelayedProblem& problem, std::shared_ptr<const Paths> paths,
                      const SolveOptions& options);

/// Y_0 with the standard error of the plain average that produced it.
Estimate y0_estimate(const DelayedProblem& problem, const DelayOperator& op, const Ensemble& e);

}  // namespace tdbsde
