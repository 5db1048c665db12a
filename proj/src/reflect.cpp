#include "tdbsde/reflect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "tdbsde/simulate.hpp"

namespace tdbsde {

Barrier Barrier::constant(double c) {
  std::ostringstream name;
  name << "constant(" << c << ")";
  return {name.str(), [c](const Paths& p, int) {
            return Eigen::VectorXd::Constant(p.path_count, c).eval();
          }};
}

Eigen::MatrixXd Barrier::materialize(const Paths& paths) const {
  if (!eval) throw UsageError("barrier has no evaluator");
  const int n = paths.grid.steps();
  Eigen::MatrixXd S(paths.path_count, n + 1);
  for (int i = 0; i <= n; ++i) {
    Eigen::VectorXd col = eval(paths, i);
    if (col.size() != paths.path_count) throw UsageError("barrier returned the wrong number of paths");
    for (Index p = 0; p < col.size(); ++p)
      if (!std::isfinite(col(p))) {
        std::ostringstream msg;
        msg << "barrier value is not finite at path " << p << ", node " << i;
        throw NumericalError(msg.str(), p, i);
      }
    S.col(i) = col;
  }
  return S;
}

SkorokhodAudit audit_skorokhod(const ReflectedSolution& sol) {
  const int n = sol.ensemble.grid().steps();
  const Index rows = sol.ensemble.path_count();
  SkorokhodAudit a;
  a.min_gap = std::numeric_limits<double>::infinity();
  a.min_increment = std::numeric_limits<double>::infinity();
  for (Index p = 0; p < rows; ++p) {
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double gap = sol.ensemble.Y[static_cast<std::size_t>(i)](p, 0) - sol.S(p, i);
      a.min_gap = std::min(a.min_gap, gap);
      if (i < n) {
        const double dk = sol.K(p, i + 1) - sol.K(p, i);
        a.min_increment = std::min(a.min_increment, dk);
        sum += gap * dk;
      }
    }
    a.max_sum = std::max(a.max_sum, std::abs(sum));
  }
  if (n == 0) a.min_increment = 0.0;
  a.passed = a.max_sum <= kSkorokhodTolerance && a.min_gap >= 0.0 && a.min_increment >= 0.0 &&
             (rows == 0 || sol.K.col(0).isZero(0.0));
  return a;
}

ReflectedSolution reflected_step(const DelayedProblem& problem, const Barrier& barrier,
                                 const Ensemble& prev) {
  validate_problem(problem);
  if (!prev.paths) throw UsageError("reflected_step: ensemble has no paths");
  return reflected_step(problem, build_delay_operator(problem), barrier.materialize(*prev.paths),
                        prev);
}

ReflectedSolution reflected_step(const DelayedProblem& problem, const DelayOperator& op,
                                 const Eigen::MatrixXd& barrier_values, const Ensemble& prev,
                                 std::vector<std::string>* warnings) {
  if (problem.m() != 1) throw UsageError("reflected equations require m = 1");
  if (!prev.paths || !(prev.grid() == problem.grid) || prev.m != 1 ||
      prev.noise_dim() != problem.d())
    throw UsageError("reflected_step: ensemble does not match the problem");
  const int n = problem.grid.steps();
  const double dt = problem.grid.dt();
  const Index rows = prev.path_count();
  if (barrier_values.rows() != rows || barrier_values.cols() != n + 1)
    throw UsageError("reflected_step: barrier values have the wrong shape");
  const auto& paths = *prev.paths;

  ReflectedSolution out{Ensemble(prev.paths, 1), Eigen::MatrixXd::Zero(rows, n + 1), barrier_values};
  Eigen::MatrixXd xi = problem.terminal.eval(paths);
  if (xi.rows() != rows || xi.cols() != 1)
    throw UsageError("terminal condition returned a block of the wrong shape");
  for (Index p = 0; p < rows; ++p) {
    if (!std::isfinite(xi(p, 0))) {
      std::ostringstream msg;
      msg << "terminal value is not finite at path " << p << ", node " << n;
      throw NumericalError(msg.str(), p, n);
    }
    if (barrier_values(p, n) > xi(p, 0)) {
      std::ostringstream msg;
      msg << "barrier exceeds the terminal value at path " << p << " (S_T = " << barrier_values(p, n)
          << ", xi = " << xi(p, 0) << ")";
      throw AssumptionError("A5", msg.str());
    }
  }
  out.ensemble.Y[static_cast<std::size_t>(n)] = std::move(xi);

  Eigen::VectorXd pushes = Eigen::VectorXd::Zero(rows);
  std::vector<Eigen::VectorXd> dk(static_cast<std::size_t>(n));
  int ridge_slices = 0;
  for (int i = n - 1; i >= 0; --i) {
    const Eigen::MatrixXd g = frozen_driver(problem, op, prev, i);
    const SliceRegression<double> reg(paths.W[static_cast<std::size_t>(i)], problem.basis.degree);
    if (reg.regularized()) ++ridge_slices;
    const auto& ynext = out.ensemble.Y[static_cast<std::size_t>(i + 1)];
    Eigen::MatrixXd targets(rows, 2);
    targets << ynext, g;
    const Eigen::MatrixXd fitted = reg.fit(targets);
    out.ensemble.Z[static_cast<std::size_t>(i)] = reg.fit(
        martingale_targets<double>(ynext - fitted.leftCols(1), paths.increment(i), dt));
    const Eigen::VectorXd cont = fitted.col(0) + dt * fitted.col(1);
    const Eigen::VectorXd y = cont.cwiseMax(barrier_values.col(i));
    dk[static_cast<std::size_t>(i)] = y - cont;
    out.ensemble.Y[static_cast<std::size_t>(i)] = y;
  }
  for (int i = 0; i < n; ++i) out.K.col(i + 1) = out.K.col(i) + dk[static_cast<std::size_t>(i)];
  if (warnings != nullptr && ridge_slices > 0) {
    std::ostringstream w;
    w << "ridge regularisation used on " << ridge_slices << " of " << n << " slices";
    warnings->push_back(w.str());
  }
  return out;
}

ReflectedResult solve_reflected(const DelayedProblem& problem, const Barrier& barrier,
                                const SolveOptions& options) {
  validate_problem(problem);
  return solve_reflected(problem, barrier,
                         simulate_brownian(problem.grid, problem.d(), options.paths, options.rng),
                         options);
}

ReflectedResult solve_reflected(const DelayedProblem& problem, const Barrier& barrier,
                                std::shared_ptr<const Paths> paths, const SolveOptions& options) {
  validate_problem(problem);
  if (problem.m() != 1) throw UsageError("reflected equations require m = 1");
  if (!paths) throw UsageError("solve_reflected: null paths");
  if (options.tol < 0.0 || options.max_iter < 1)
    throw UsageError("solve_reflected: tol must be >= 0 and max_iter >= 1");

  ReflectedResult out;
  out.report = check_contraction(problem.generator.lipschitz_k, problem.alpha1, problem.alpha2,
                                 problem.u, problem.v, Variant::reflected);
  if (!out.report.satisfied) {
    if (!options.override_gate) throw ContractionRefusal(out.report);
    out.warnings.push_back(
        "contraction condition not satisfied; solved under override, uniqueness is not guaranteed");
  }

  const DelayOperator op = build_delay_operator(problem);
  const Eigen::MatrixXd S = barrier.materialize(*paths);
  Ensemble prev(std::move(paths), 1);
  ReflectedSolution current;
  std::set<std::string> seen;
  for (int k = 1; k <= options.max_iter; ++k) {
    std::vector<std::string> step_warnings;
    ReflectedSolution next = reflected_step(problem, op, S, prev, &step_warnings);
    for (auto& w : step_warnings) seen.insert(std::move(w));
    PicardIterate it{k, empirical_s2_norm(next.ensemble, prev),
                     empirical_h2_norm(next.ensemble, prev)};
    out.trace.iterations.push_back(it);
    prev = next.ensemble;
    current = std::move(next);
    if (it.total() <= options.tol * options.tol) {
      out.trace.converged = true;
      break;
    }
  }
  out.warnings.insert(out.warnings.end(), seen.begin(), seen.end());
  if (!out.trace.converged)
    out.warnings.push_back("Picard iteration did not reach the tolerance within max_iter");

  // Y_0 = max(C_0, S_0); the standard error is that of the average behind C_0.
  const Eigen::MatrixXd g0 = frozen_driver(problem, op, current.ensemble, 0);
  const Eigen::VectorXd target = current.ensemble.Y[1].col(0) + problem.grid.dt() * g0.col(0);
  out.y0 = mean_estimate<double>(target);
  out.y0.value = current.ensemble.Y[0](0, 0);
  out.audit = audit_skorokhod(current);
  if (!out.audit.passed) out.warnings.push_back("Skorokhod audit failed");
  out.solution = std::move(current);
  return out;
}

double snell_value(const TreeProblem& tree) {
  if (tree.levels > kMaxTreeLevels) {
    std::ostringstream msg;
    msg << "snell_value: " << tree.levels << " levels requested, the oracle is limited to "
        << kMaxTreeLevels;
    throw GateRefusal(msg.str());
  }
  if (tree.levels < 1 || !(tree.horizon > 0.0) || !std::isfinite(tree.horizon))
    throw UsageError("snell_value: need levels >= 1 and a finite positive horizon");
  if (!tree.driver || !tree.barrier || !tree.terminal)
    throw UsageError("snell_value: driver, barrier and terminal are required");
  const int n = tree.levels;
  const double dt = tree.horizon / n;
  const double h = std::sqrt(dt);
  std::vector<double> v(static_cast<std::size_t>(n + 1));
  for (int j = 0; j <= n; ++j) v[static_cast<std::size_t>(j)] = tree.terminal((2 * j - n) * h);
  for (int k = n - 1; k >= 0; --k) {
    const double t = k * dt;
    for (int j = 0; j <= k; ++j) {
      const double w = (2 * j - k) * h;
      const double cont = tree.driver(t, w) * dt +
                          0.5 * (v[static_cast<std::size_t>(j + 1)] + v[static_cast<std::size_t>(j)]);
      v[static_cast<std::size_t>(j)] = std::max(tree.barrier(t, w), cont);
    }
  }
  return v[0];
}

}  // namespace tdbsde
