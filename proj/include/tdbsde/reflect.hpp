#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tdbsde/solver.hpp"

namespace tdbsde {

/// Lower barrier S. `eval(paths, i)` may only read W up to node i, which keeps
/// the barrier adapted; values are sampled at grid nodes only, so a jump
/// strictly between two nodes is not seen.
struct Barrier {
  std::string name;
  std::function<Eigen::VectorXd(const Paths&, int)> eval;

  static Barrier constant(double c);

  // M x (N+1) matrix of S_{t_i} per path.
  Eigen::MatrixXd materialize(const Paths& paths) const;
};

struct ReflectedSolution {
  Ensemble ensemble;  // m = 1
  Eigen::MatrixXd K;  // M x (N+1), K_0 = 0, nondecreasing
  Eigen::MatrixXd S;  // M x (N+1)
};

struct SkorokhodAudit {
  double max_sum = 0.0;   // max over paths of sum_i (Y_i - S_i)(K_{i+1} - K_i)
  double min_gap = 0.0;   // min over (path, node) of Y - S
  double min_increment = 0.0;
  bool passed = false;
};

inline constexpr double kSkorokhodTolerance = 1e-8;

SkorokhodAudit audit_skorokhod(const ReflectedSolution& sol);

/// One Picard step with reflection: C_i = E[Y_{i+1} + g_i dt | F_{t_i}],
/// Y_i = max(C_i, S_i), K_{i+1} - K_i = Y_i - C_i. Z comes from the
/// continuation, before the max is taken.
ReflectedSolution reflected_step(const DelayedProblem& problem, const Barrier& barrier,
                                 const Ensemble& prev);
ReflectedSolution reflected_step(const DelayedProblem& problem, const DelayOperator& op,
                                 const Eigen::MatrixXd& barrier_values, const Ensemble& prev,
                                 std::vector<std::string>* warnings = nullptr);

struct ReflectedResult {
  ReflectedSolution solution;
  PicardTrace trace;
  ContractionReport report;
  Estimate y0;
  SkorokhodAudit audit;
  std::vector<std::string> warnings;
};

ReflectedResult solve_reflected(const DelayedProblem& problem, const Barrier& barrier,
                                const SolveOptions& options);
ReflectedResult solve_reflected(const DelayedProblem& problem, const Barrier& barrier,
                                std::shared_ptr<const Paths> paths, const SolveOptions& options);

/// Optimal stopping on a recombining binomial tree, W = (2j - k) sqrt(dt) at
/// level k. Stopping at level k < n pays barrier(t_k, w) plus the driver
/// accumulated so far; reaching level n pays terminal(w).
struct TreeProblem {
  double horizon = 1.0;
  int levels = 12;
  std::function<double(double t, double w)> driver;
  std::function<double(double t, double w)> barrier;
  std::function<double(double w)> terminal;
};

inline constexpr int kMaxTreeLevels = 12;

// Throws GateRefusal above kMaxTreeLevels.
double snell_value(const TreeProblem& tree);

}  // namespace tdbsde
