#include "tdbsde/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tdbsde/presets.hpp"
#include "tdbsde/simulate.hpp"

namespace tdbsde {

std::string to_string(MeasureOrder o) {
  switch (o) {
    case MeasureOrder::equal: return "equal";
    case MeasureOrder::less_equal: return "less-equal";
    case MeasureOrder::greater_equal: return "greater-equal";
    case MeasureOrder::unordered: return "unordered";
  }
  return "unordered";
}

DelayedProblem with_grid(const DelayedProblem& problem, int steps) {
  DelayedProblem p = problem;
  p.grid = TimeGrid(problem.grid.horizon(), steps);
  return p;
}

SweepResult stability_sweep(const DelayedProblem& base, const MeasureFamily& family,
                            const std::vector<int>& n_list, const SolveOptions& options) {
  validate_problem(base);
  if (!family) throw UsageError("stability_sweep: empty family");
  auto paths = simulate_brownian(base.grid, base.d(), options.paths, options.rng);
  const DelayedSolution limit = solve(base, paths, options);

  SweepResult out;
  out.base_y0 = limit.y0;
  out.base_s2sq = empirical_s2_norm(limit.ensemble);
  out.base_h2sq = empirical_h2_norm(limit.ensemble);
  out.warnings = limit.warnings;

  for (int n : n_list) {
    SweepRow row;
    row.n = n;
    auto [a1, a2] = family(n);
    row.gap_y = std::abs(a1.total_mass() - base.alpha1.total_mass());
    row.gap_z = std::abs(a2.total_mass() - base.alpha2.total_mass());
    row.order_y = to_string(compare_measures(a1, base.alpha1));
    row.order_z = to_string(compare_measures(a2, base.alpha2));
    if (row.order_y == "unordered" || row.order_z == "unordered") {
      std::ostringstream w;
      w << "n = " << n << ": family member is not ordered against the base measures";
      out.warnings.push_back(w.str());
    }
    row.bound = stability_bound(base.generator.lipschitz_k, base.u, base.v, row.gap_y, row.gap_z,
                                out.base_s2sq, out.base_h2sq);
    DelayedProblem member = base;
    member.alpha1 = std::move(a1);
    member.alpha2 = std::move(a2);
    try {
      const DelayedSolution s = solve(member, paths, options);
      row.err_s2sq = s2_estimate(s.ensemble, limit.ensemble);
      row.err_h2sq = h2_estimate(s.ensemble, limit.ensemble);
      row.y0 = s.y0;
    } catch (const ContractionRefusal& e) {
      row.gate_ok = false;
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

CounterexampleReport counterexample_run(Index paths, int steps, const SolveOptions& options) {
  const DelayedProblem plain = presets::counterexample_problem(steps, false);
  const DelayedProblem strong = presets::counterexample_problem(steps, true);
  SolveOptions opts = options;
  opts.paths = paths;
  auto shared = simulate_brownian(plain.grid, 1, paths, options.rng);
  DelayedSolution y = solve(plain, shared, opts);
  DelayedSolution ybar = solve(strong, shared, opts);

  CounterexampleReport r;
  r.y0 = y.y0;
  r.ybar0 = ybar.y0;
  for (int i = 0; i <= steps; ++i) {
    const double t = plain.grid.node(i);
    const double exact = std::exp(-(1.0 - t) / 5.0);
    const auto& yi = y.ensemble.Y[static_cast<std::size_t>(i)];
    const auto& bi = ybar.ensemble.Y[static_cast<std::size_t>(i)];
    r.max_curve_error = std::max(r.max_curve_error, (yi.array() - exact).abs().maxCoeff());
    r.max_ybar_deviation = std::max(r.max_ybar_deviation, (bi.array() - 1.0).abs().maxCoeff());
    r.curve.push_back({t, yi.mean(), exact, bi.mean()});
  }
  r.trace = std::move(y.trace);
  r.trace_bar = std::move(ybar.trace);
  r.report = std::move(y.report);
  r.warnings = std::move(y.warnings);
  r.warnings.insert(r.warnings.end(), ybar.warnings.begin(), ybar.warnings.end());
  return r;
}

AprioriRow apriori_conformance(const DelayedProblem& problem, const TerminalSpec& other,
                               const SolveOptions& options) {
  validate_problem(problem);
  DelayedProblem second = problem;
  second.terminal = other;
  validate_problem(second);
  auto paths = simulate_brownian(problem.grid, problem.d(), options.paths, options.rng);
  const DelayedSolution a = solve(problem, paths, options);
  const DelayedSolution b = solve(second, paths, options);

  AprioriRow row;
  const Estimate ds = s2_estimate(a.ensemble, b.ensemble);
  const Estimate dh = h2_estimate(a.ensemble, b.ensemble);
  row.measured = {ds.value + dh.value, std::hypot(ds.std_error, dh.std_error)};
  const Eigen::MatrixXd xa = problem.terminal.eval(*paths);
  const Eigen::MatrixXd xb = other.eval(*paths);
  row.xi_diff = mean_estimate<double>((xa - xb).rowwise().squaredNorm());
  row.bound = apriori_bound(problem.generator.lipschitz_k, problem.alpha1, problem.alpha2,
                            problem.u, problem.v, row.xi_diff.value, ds.value, dh.value);
  // Sensitivity of the bound to each input, for its standard error.
  const double cy = apriori_bound(problem.generator.lipschitz_k, problem.alpha1, problem.alpha2,
                                  problem.u, problem.v, 0.0, 1.0, 0.0);
  const double cz = apriori_bound(problem.generator.lipschitz_k, problem.alpha1, problem.alpha2,
                                  problem.u, problem.v, 0.0, 0.0, 1.0);
  const double bound_se =
      std::sqrt(std::pow(10.0 * row.xi_diff.std_error, 2) + std::pow(cy * ds.std_error, 2) +
                std::pow(cz * dh.std_error, 2));
  row.combined_stderr = std::hypot(row.measured.std_error, bound_se);
  row.passed = row.measured.value <= row.bound + 3.0 * row.combined_stderr;
  return row;
}

namespace {

// Gauss-Hermite rule for the standard normal (probabilists' weight), via the
// eigen-decomposition of the Jacobi matrix.
std::pair<Eigen::VectorXd, Eigen::VectorXd> normal_quadrature(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  Eigen::VectorXd w = eig.eigenvectors().row(0).transpose().array().square();
  return {eig.eigenvalues(), w};
}

bool depends_on_terminal_w_only(const TerminalSpec& t) {
  for (const char* prefix : {"constant(", "brownian(", "tanh(", "sin(", "put("})
    if (t.name.rfind(prefix, 0) == 0) return true;
  return false;
}

bool is_unit_dirac0(const DelayMeasure& a) {
  return a.density().empty() && a.atoms().size() == 1 && a.atoms()[0].location == 0.0 &&
         a.atoms()[0].mass == 1.0;
}

bool is_unit(const WeightFunction& w) {
  return w.kind() == WeightFunction::Kind::constant && w.params().at(0) == 1.0;
}

}  // namespace

std::optional<double> known_y0(const DelayedProblem& p) {
  if (p.m() != 1 || p.d() != 1 || !p.terminal.eval || !p.generator.eval) return std::nullopt;
  const double T = p.grid.horizon();
  if (!depends_on_terminal_w_only(p.terminal)) return std::nullopt;

  auto terminal_at = [&](const Eigen::VectorXd& w) {
    const Paths paths{TimeGrid(T, 1), w.size(), 1, RngSpec{},
                      {Eigen::MatrixXd::Zero(w.size(), 1), Eigen::MatrixXd(w)}};
    return p.terminal.eval(paths).col(0).eval();
  };

  if (p.generator.name == "zero") {
    const auto [x, w] = normal_quadrature(80);
    return w.dot(terminal_at(std::sqrt(T) * x));
  }

  // Constant xi with delta_0 measures: Z = 0 and Y' = -g(t, Y, 0).
  if (p.terminal.name.rfind("constant(", 0) != 0 || !is_unit_dirac0(p.alpha1) ||
      !is_unit_dirac0(p.alpha2) || !is_unit(p.u) || !is_unit(p.v))
    return std::nullopt;
  const Eigen::MatrixXd probe_state = (Eigen::MatrixXd(3, 1) << -1.0, 0.0, 2.0).finished();
  const Eigen::MatrixXd probe_y = Eigen::MatrixXd::Constant(3, 1, 0.7);
  const Eigen::MatrixXd probe_z = Eigen::MatrixXd::Zero(3, 1);
  const Eigen::MatrixXd g = p.generator.eval(0.3 * T, probe_y, probe_z, probe_state);
  if (g.rows() != 3 || (g.array() != g(0, 0)).any()) return std::nullopt;

  const Eigen::MatrixXd zero_z = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd zero_w = Eigen::MatrixXd::Zero(1, 1);
  auto rhs = [&](double t, double y) {
    return -p.generator.eval(t, Eigen::MatrixXd::Constant(1, 1, y), zero_z, zero_w)(0, 0);
  };
  const int steps = 20000;
  const double h = T / steps;
  double y = terminal_at(Eigen::VectorXd::Zero(1))(0);
  for (int k = steps; k > 0; --k) {
    const double t = k * h;
    const double k1 = rhs(t, y);
    const double k2 = rhs(t - h / 2, y - h / 2 * k1);
    const double k3 = rhs(t - h / 2, y - h / 2 * k2);
    const double k4 = rhs(t - h, y - h * k3);
    y -= h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("log_log_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0) || !(y[k] > 0)) throw UsageError("log_log_slope: values must be positive");
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw UsageError("log_log_slope: x values are all equal");
  return (n * sxy - sx * sy) / den;
}

RefinementResult refinement_study(const DelayedProblem& problem, const std::vector<int>& n_list,
                                  const std::vector<Index>& m_list, int replications,
                                  const SolveOptions& options, std::optional<double> reference) {
  validate_problem(problem);
  if (n_list.empty() || m_list.empty() || replications < 1)
    throw UsageError("refinement_study: need N values, M values and replications >= 1");
  if (!reference) reference = known_y0(problem);
  if (!reference)
    throw GateRefusal("refinement_study: no closed-form or oracle reference for this problem");
  const int n_max = *std::max_element(n_list.begin(), n_list.end());
  for (int n : n_list)
    if (n < 1 || n_max % n != 0)
      throw UsageError("refinement_study: every N must divide the largest N");

  RefinementResult out;
  out.reference = *reference;
  const TimeGrid fine(problem.grid.horizon(), n_max);
  for (Index m : m_list) {
    std::vector<std::vector<double>> y0(n_list.size());
    for (int r = 0; r < replications; ++r) {
      RngSpec rng = options.rng;
      rng.seed = options.rng.seed + static_cast<std::uint64_t>(r);
      auto fine_paths = simulate_brownian(fine, problem.d(), m, rng);
      for (std::size_t k = 0; k < n_list.size(); ++k) {
        const int n = n_list[k];
        auto paths = n == n_max ? fine_paths : coarsen(*fine_paths, n_max / n);
        SolveOptions opts = options;
        opts.paths = m;
        y0[k].push_back(solve(with_grid(problem, n), paths, opts).y0.value);
      }
    }
    for (std::size_t k = 0; k < n_list.size(); ++k) {
      RefinementRow row;
      row.steps = n_list[k];
      row.paths = m;
      double sq = 0.0, sum = 0.0;
      for (double v : y0[k]) {
        sq += (v - *reference) * (v - *reference);
        sum += v - *reference;
      }
      row.rmse = std::sqrt(sq / replications);
      row.mean_error = sum / replications;
      const auto [lo, hi] = std::minmax_element(y0[k].begin(), y0[k].end());
      row.y0_spread = *hi - *lo;
      out.rows.push_back(row);
    }
  }

  const Index m_max = *std::max_element(m_list.begin(), m_list.end());
  std::vector<double> ns, errs_n, ms, errs_m;
  for (const auto& row : out.rows) {
    if (row.paths == m_max && row.rmse > 0) {
      ns.push_back(row.steps);
      errs_n.push_back(row.rmse);
    }
    if (row.steps == n_max && row.rmse > 0) {
      ms.push_back(static_cast<double>(row.paths));
      errs_m.push_back(row.rmse);
    }
  }
  if (ns.size() >= 2) out.time_order = -log_log_slope(ns, errs_n);
  if (ms.size() >= 2) out.mc_slope = log_log_slope(ms, errs_m);
  return out;
}

}  // namespace tdbsde
