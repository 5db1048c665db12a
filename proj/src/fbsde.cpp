#include "tdbsde/fbsde.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tdbsde/simulate.hpp"

namespace tdbsde {

namespace {

void validate(const CoupledProblem& p) {
  if (!p.generator.eval) throw UsageError("coupled problem: generator has no driver");
  if (!p.terminal.eval) throw UsageError("coupled problem: terminal condition is missing");
  if (p.terminal.m != p.generator.m)
    throw UsageError("coupled problem: terminal dimension differs from generator dimension");
  if (p.basis.degree < 0) throw UsageError("coupled problem: basis degree must be >= 0");
}

void forward_pass(Ensemble& e, const std::vector<Eigen::MatrixXd>& y_prev, double dt) {
  const int n = e.grid().steps();
  e.X.assign(static_cast<std::size_t>(n + 1), Eigen::MatrixXd::Zero(e.path_count(), e.m));
  for (int i = 0; i < n; ++i)
    e.X[static_cast<std::size_t>(i + 1)] =
        e.X[static_cast<std::size_t>(i)] + dt * y_prev[static_cast<std::size_t>(i)];
}

}  // namespace

FbsdeResult solve_fbsde(const CoupledProblem& problem, const FbsdeOptions& options) {
  validate(problem);
  return solve_fbsde(problem,
                     simulate_brownian(problem.grid, problem.d(), options.paths, options.rng),
                     options);
}

FbsdeResult solve_fbsde(const CoupledProblem& problem, std::shared_ptr<const Paths> paths,
                        const FbsdeOptions& options) {
  validate(problem);
  if (!paths) throw UsageError("solve_fbsde: null paths");
  if (!(paths->grid == problem.grid) || paths->dim != problem.d())
    throw UsageError("solve_fbsde: paths do not match the problem");
  if (options.tol < 0.0 || options.max_iter < 1 || !(options.clamp > 0.0))
    throw UsageError("solve_fbsde: tol >= 0, max_iter >= 1 and clamp > 0 are required");

  const int n = problem.grid.steps();
  const int m = problem.m();
  const double dt = problem.grid.dt();
  const double cap = options.clamp / dt;
  const Index rows = paths->path_count;

  FbsdeResult out;
  Ensemble prev(paths, m);
  forward_pass(prev, prev.Y, dt);
  Eigen::MatrixXd xi = problem.terminal.eval(*paths);
  if (xi.rows() != rows || xi.cols() != m)
    throw UsageError("terminal condition returned a block of the wrong shape");
  if (!xi.allFinite()) throw NumericalError("terminal value is not finite", std::nullopt, n);

  std::set<std::string> seen;
  int growth = 0;
  double last = 0.0;
  for (int k = 1; k <= options.max_iter; ++k) {
    Ensemble next(paths, m);
    forward_pass(next, prev.Y, dt);
    next.Y[static_cast<std::size_t>(n)] = xi;
    long clamps = 0;
    int ridge_slices = 0;
    for (int i = n - 1; i >= 0; --i) {
      const SliceRegression<double> reg(regression_state(next, i), problem.basis.degree);
      if (reg.regularized()) ++ridge_slices;
      const auto& ynext = next.Y[static_cast<std::size_t>(i + 1)];
      const Eigen::MatrixXd cont = reg.fit(ynext);
      next.Z[static_cast<std::size_t>(i)] =
          reg.fit(martingale_targets<double>(ynext - cont, paths->increment(i), dt));
      Eigen::MatrixXd g = problem.generator.eval(problem.grid.node(i), next.X[static_cast<std::size_t>(i)],
                                                 next.Z[static_cast<std::size_t>(i)],
                                                 paths->W[static_cast<std::size_t>(i)]);
      if (g.rows() != rows || g.cols() != m)
        throw UsageError("generator returned a block of the wrong shape");
      for (Index p = 0; p < rows; ++p)
        for (Index c = 0; c < m; ++c) {
          double& v = g(p, c);
          if (std::isnan(v)) {
            std::ostringstream msg;
            msg << "driver value is not finite at path " << p << ", node " << i;
            throw NumericalError(msg.str(), p, i);
          }
          if (v > cap || v < -cap) {
            v = std::clamp(v, -cap, cap);
            ++clamps;
          }
        }
      next.Y[static_cast<std::size_t>(i)] = cont + dt * g;
    }
    if (ridge_slices > 0) {
      std::ostringstream w;
      w << "ridge regularisation used on " << ridge_slices << " of " << n << " slices";
      seen.insert(w.str());
    }

    PicardIterate it{k, empirical_s2_norm(next, prev), empirical_h2_norm(next, prev)};
    out.trace.iterations.push_back(it);
    out.clamp_activations = clamps;
    if (!std::isfinite(it.total()))
      throw DivergenceError("forward-backward iteration produced non-finite iterates; try a smaller T");
    growth = (k > 1 && it.total() > last && it.total() > options.tol * options.tol) ? growth + 1 : 0;
    last = it.total();
    prev = std::move(next);
    if (growth >= 3) {
      std::ostringstream msg;
      msg << "forward-backward iteration diverges (difference grew three times in a row, last "
          << it.total() << "); try a smaller T";
      throw DivergenceError(msg.str());
    }
    if (it.total() <= options.tol * options.tol) {
      out.trace.converged = true;
      break;
    }
  }

  // X was built from the previous Y; measure how far it is from int Y of the final one.
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd r = prev.X[static_cast<std::size_t>(i + 1)] -
                              prev.X[static_cast<std::size_t>(i)] -
                              dt * prev.Y[static_cast<std::size_t>(i)];
    out.forward_residual = std::max(out.forward_residual, r.cwiseAbs().maxCoeff());
  }
  out.warnings.assign(seen.begin(), seen.end());
  if (!out.trace.converged)
    out.warnings.push_back("forward-backward iteration did not reach the tolerance within max_iter");
  if (out.clamp_activations > 0) {
    std::ostringstream w;
    w << "driver clamp active " << out.clamp_activations << " times in the final sweep; run is not valid";
    out.warnings.push_back(w.str());
  }
  out.valid = out.trace.converged && out.clamp_activations == 0;

  // Y_0 is a plain average at t = 0; its standard error is that of Y_1 + g_0 dt.
  Eigen::MatrixXd g0 = problem.generator.eval(0.0, prev.X[0], prev.Z[0], paths->W[0]);
  const Eigen::VectorXd target = prev.Y[1].col(0) + dt * g0.col(0);
  out.y0 = mean_estimate<double>(target);
  out.y0.value = prev.Y[0](0, 0);
  out.ensemble = std::move(prev);
  return out;
}

BmoReport bmo_diagnostic(const Ensemble& e, const BasisSpec& basis) {
  detail::require_nonempty(e, "bmo_diagnostic");
  const int n = e.grid().steps();
  const double dt = e.grid().dt();
  BmoReport r;
  r.node_mean.assign(static_cast<std::size_t>(n + 1), 0.0);
  r.node_max.assign(static_cast<std::size_t>(n + 1), 0.0);
  Eigen::VectorXd remaining = Eigen::VectorXd::Zero(e.path_count());
  for (int i = n - 1; i >= 0; --i) {
    const auto& z = e.Z[static_cast<std::size_t>(i)];
    remaining += dt * z.rowwise().squaredNorm();
    r.z_infty = std::max(r.z_infty, z.cwiseAbs().maxCoeff());
    if (i == 0) {
      r.node_mean[0] = r.node_max[0] = remaining.mean();
    } else {
      const Eigen::MatrixXd fitted = cond_expect<double>(remaining, e, i, basis);
      r.node_mean[static_cast<std::size_t>(i)] = fitted.mean();
      r.node_max[static_cast<std::size_t>(i)] = fitted.maxCoeff();
    }
  }
  for (double v : r.node_max) r.bmo_sq = std::max(r.bmo_sq, v);
  return r;
}

CoupledProblem coupled_from_delayed(const DelayedProblem& delayed) {
  validate_problem(delayed);
  const double T = delayed.grid.horizon();
  const auto& a1 = delayed.alpha1;
  const auto& a2 = delayed.alpha2;
  const bool uniform = a1.atoms().empty() && a1.density().levels.size() == 1 &&
                       a1.density().levels[0] == 1.0 && a1.density().breakpoints.front() == -T &&
                       a1.density().breakpoints.back() == 0.0;
  const bool dirac0 = a2.density().empty() && a2.atoms().size() == 1 &&
                      a2.atoms()[0].location == 0.0 && a2.atoms()[0].mass == 1.0;
  const auto unit = [](const WeightFunction& w) {
    return w.kind() == WeightFunction::Kind::constant && w.params().at(0) == 1.0;
  };
  if (!uniform || !dirac0 || !unit(delayed.u) || !unit(delayed.v))
    throw UsageError(
        "equivalence needs alpha1 = uniform density 1 on [-T, 0], alpha2 = delta_0 and unit weights");
  return {delayed.grid, delayed.generator, delayed.terminal, delayed.basis};
}

EquivalenceReport equivalence_check(const DelayedProblem& delayed, const SolveOptions& options) {
  const CoupledProblem coupled = coupled_from_delayed(delayed);
  auto paths = simulate_brownian(delayed.grid, delayed.d(), options.paths, options.rng);

  EquivalenceReport r;
  DelayedSolution ds = solve(delayed, paths, options);
  FbsdeOptions fo;
  fo.paths = options.paths;
  fo.rng = options.rng;
  fo.tol = options.tol;
  fo.max_iter = options.max_iter;
  FbsdeResult fs = solve_fbsde(coupled, paths, fo);

  r.s2_diff = std::sqrt(empirical_s2_norm(ds.ensemble, fs.ensemble));
  r.h2_diff = std::sqrt(empirical_h2_norm(ds.ensemble, fs.ensemble));
  r.passed = r.s2_diff <= r.tolerance && r.h2_diff <= r.tolerance;
  r.delayed_y0 = ds.y0;
  r.fbsde_y0 = fs.y0;
  r.delayed_trace = std::move(ds.trace);
  r.fbsde_trace = std::move(fs.trace);
  r.report = std::move(ds.report);
  r.warnings = std::move(ds.warnings);
  r.warnings.insert(r.warnings.end(), fs.warnings.begin(), fs.warnings.end());
  return r;
}

}  // namespace tdbsde
