#include "tdbsde/solver.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "tdbsde/simulate.hpp"

namespace tdbsde {

void validate_problem(const DelayedProblem& p) {
  const double T = p.grid.horizon();
  if (p.alpha1.horizon() != T || p.alpha2.horizon() != T || p.u.horizon() != T ||
      p.v.horizon() != T)
    throw UsageError("problem: measures and weights must share the grid horizon");
  if (!p.generator.eval) throw UsageError("problem: generator has no driver");
  if (!p.terminal.eval) throw UsageError("problem: terminal condition is missing");
  if (p.generator.m < 1 || p.generator.d < 1) throw UsageError("problem: dimensions must be >= 1");
  if (p.terminal.m != p.generator.m)
    throw UsageError("problem: terminal dimension differs from generator dimension");
  if (p.basis.degree < 0) throw UsageError("problem: basis degree must be >= 0");
}

std::vector<double> PicardTrace::ratios(double floor) const {
  std::vector<double> out;
  for (std::size_t k = 1; k + 1 < iterations.size(); ++k) {
    const double prev = iterations[k].total();  // iteration k+1 in 1-based terms
    if (!(prev > floor)) break;
    out.push_back(iterations[k + 1].total() / prev);
  }
  return out;
}

namespace {
std::string describe(const ContractionReport& r) {
  std::ostringstream os;
  os << "contraction condition not satisfied (lhsY = " << r.lhs_y << ", lhsZ = " << r.lhs_z
     << ", threshold = " << r.threshold << "); pass override to solve anyway";
  return os.str();
}
}  // namespace

ContractionRefusal::ContractionRefusal(ContractionReport report)
    : GateRefusal(describe(report)), report_(std::move(report)) {}

DelayOperator build_delay_operator(const DelayedProblem& problem) {
  return {build_stencil(problem.grid, problem.alpha1, problem.u),
          build_stencil(problem.grid, problem.alpha2, problem.v)};
}

namespace {

bool reaches_past(const DelayStencil& stencil, int i) {
  for (const auto& e : stencil.nodes[static_cast<std::size_t>(i)])
    if (e.source != kZeroSource && e.source < i) return true;
  return false;
}

void check_finite(const Eigen::MatrixXd& values, int node, const char* what) {
  if (values.allFinite()) return;
  for (Index p = 0; p < values.rows(); ++p)
    if (!values.row(p).allFinite()) {
      std::ostringstream msg;
      msg << what << " is not finite at path " << p << ", node " << node;
      throw NumericalError(msg.str(), p, node);
    }
}

void check_ensemble(const DelayedProblem& problem, const Ensemble& e, const char* who) {
  if (!e.paths) throw UsageError(std::string(who) + ": ensemble has no paths");
  if (!(e.grid() == problem.grid)) throw UsageError(std::string(who) + ": grid mismatch");
  if (e.m != problem.m() || e.noise_dim() != problem.d())
    throw UsageError(std::string(who) + ": ensemble dimensions differ from the problem");
}

}  // namespace

Eigen::MatrixXd frozen_driver(const DelayedProblem& problem, const DelayOperator& op,
                              const Ensemble& prev, int i) {
  const Eigen::MatrixXd gy = apply_stencil(op.y_leg, prev, Leg::Y, i);
  const Eigen::MatrixXd gz = apply_stencil(op.z_leg, prev, Leg::Z, i);
  Eigen::MatrixXd g =
      problem.generator.eval(problem.grid.node(i), gy, gz, prev.paths->W[static_cast<std::size_t>(i)]);
  if (g.rows() != prev.path_count() || g.cols() != problem.m())
    throw UsageError("generator returned a block of the wrong shape");
  check_finite(g, i, "driver value");
  return g;
}

Ensemble picard_step(const DelayedProblem& problem, const Ensemble& prev) {
  validate_problem(problem);
  return picard_step(problem, build_delay_operator(problem), prev);
}

Ensemble picard_step(const DelayedProblem& problem, const DelayOperator& op, const Ensemble& prev,
                     std::vector<std::string>* warnings) {
  check_ensemble(problem, prev, "picard_step");
  const int n = problem.grid.steps();
  const int m = problem.m();
  const double dt = problem.grid.dt();
  const auto& paths = *prev.paths;

  Ensemble next(prev.paths, m);
  Eigen::MatrixXd xi = problem.terminal.eval(paths);
  if (xi.rows() != prev.path_count() || xi.cols() != m)
    throw UsageError("terminal condition returned a block of the wrong shape");
  check_finite(xi, n, "terminal value");
  next.Y[static_cast<std::size_t>(n)] = std::move(xi);

  int ridge_slices = 0;
  double worst_condition = 1.0;
  for (int i = n - 1; i >= 0; --i) {
    const Eigen::MatrixXd g = frozen_driver(problem, op, prev, i);
    Eigen::MatrixXd state = paths.W[static_cast<std::size_t>(i)];
    if (problem.basis.augment_delay_state) {
      // A leg that only reads the current node is already a function of the
      // slice state; feeding it back as a covariate just recycles noise.
      std::vector<Eigen::MatrixXd> legs;
      if (reaches_past(op.y_leg, i)) legs.push_back(apply_stencil(op.y_leg, prev, Leg::Y, i));
      if (reaches_past(op.z_leg, i)) legs.push_back(apply_stencil(op.z_leg, prev, Leg::Z, i));
      Index cols = state.cols();
      for (const auto& l : legs) cols += l.cols();
      Eigen::MatrixXd aug(state.rows(), cols);
      aug.leftCols(state.cols()) = state;
      Index at = state.cols();
      for (const auto& l : legs) {
        aug.middleCols(at, l.cols()) = l;
        at += l.cols();
      }
      state = std::move(aug);
    }
    const SliceRegression<double> reg(state, problem.basis.degree);
    if (reg.regularized()) ++ridge_slices;
    worst_condition = std::max(worst_condition, reg.condition_number());

    const auto& ynext = next.Y[static_cast<std::size_t>(i + 1)];
    Eigen::MatrixXd targets(ynext.rows(), 2 * m);
    targets << ynext, g;
    const Eigen::MatrixXd fitted = reg.fit(targets);
    const Eigen::MatrixXd residual = ynext - fitted.leftCols(m);
    next.Z[static_cast<std::size_t>(i)] =
        reg.fit(martingale_targets<double>(residual, paths.increment(i), dt));
    next.Y[static_cast<std::size_t>(i)] = fitted.leftCols(m) + dt * fitted.rightCols(m);
  }
  if (warnings != nullptr && ridge_slices > 0) {
    std::ostringstream w;
    w << "ridge regularisation used on " << ridge_slices << " of " << n
      << " slices (worst condition number " << worst_condition << ")";
    warnings->push_back(w.str());
  }
  return next;
}

Estimate y0_estimate(const DelayedProblem& problem, const DelayOperator& op, const Ensemble& e) {
  const Eigen::MatrixXd g = frozen_driver(problem, op, e, 0);
  const Eigen::VectorXd target = e.Y[1].col(0) + problem.grid.dt() * g.col(0);
  Estimate est = mean_estimate<double>(target);
  est.value = e.Y[0](0, 0);
  return est;
}

DelayedSolution solve(const DelayedProblem& problem, const SolveOptions& options) {
  validate_problem(problem);
  return solve(problem, simulate_brownian(problem.grid, problem.d(), options.paths, options.rng),
               options);
}

DelayedSolution solve(const DelayedProblem& problem, std::shared_ptr<const Paths> paths,
                      const SolveOptions& options) {
  validate_problem(problem);
  if (!paths) throw UsageError("solve: null paths");
  if (options.tol < 0.0 || options.max_iter < 1)
    throw UsageError("solve: tol must be >= 0 and max_iter >= 1");

  DelayedSolution out;
  out.report = check_contraction(problem.generator.lipschitz_k, problem.alpha1, problem.alpha2,
                                 problem.u, problem.v, Variant::plain);
  if (!out.report.satisfied) {
    if (!options.override_gate) throw ContractionRefusal(out.report);
    out.warnings.push_back(
        "contraction condition not satisfied; solved under override, uniqueness is not guaranteed");
  }

  const DelayOperator op = build_delay_operator(problem);
  Ensemble prev(std::move(paths), problem.m());
  check_ensemble(problem, prev, "solve");
  std::set<std::string> seen;
  for (int k = 1; k <= options.max_iter; ++k) {
    std::vector<std::string> step_warnings;
    Ensemble next = picard_step(problem, op, prev, &step_warnings);
    for (auto& w : step_warnings) seen.insert(std::move(w));
    PicardIterate it{k, empirical_s2_norm(next, prev), empirical_h2_norm(next, prev)};
    out.trace.iterations.push_back(it);
    prev = std::move(next);
    if (it.total() <= options.tol * options.tol) {
      out.trace.converged = true;
      break;
    }
  }
  out.warnings.insert(out.warnings.end(), seen.begin(), seen.end());
  if (!out.trace.converged)
    out.warnings.push_back("Picard iteration did not reach the tolerance within max_iter");
  out.y0 = y0_estimate(problem, op, prev);
  out.ensemble = std::move(prev);
  return out;
}

}  // namespace tdbsde
