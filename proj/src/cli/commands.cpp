#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <map>

#include "config.hpp"
#include "output.hpp"
#include "tdbsde/cli.hpp"
#include "tdbsde/delay.hpp"
#include "tdbsde/parallel.hpp"
#include "tdbsde/presets.hpp"
#include "tdbsde/simulate.hpp"

namespace tdbsde::cli {

namespace fs = std::filesystem;

std::vector<std::string> subcommands() {
  return {"solve",          "solve-reflected", "solve-fbsde",        "equivalence",
          "stability-sweep", "counterexample",  "check-contraction", "refine"};
}

namespace {

json header(const ExperimentConfig& cfg) {
  json j;
  j["schema"] = kSchema;
  j["command"] = cfg.command;
  j["status"] = "ok";
  j["config"] = cfg.echo;
  return j;
}

std::vector<AssumptionResult> assumptions(const ExperimentConfig& cfg, const Paths* paths,
                                          const Eigen::MatrixXd* barrier) {
  const auto& p = cfg.problem;
  AssumptionInputs in;
  in.horizon = p.grid.horizon();
  in.alpha1 = &p.alpha1.spec();
  in.alpha2 = &p.alpha2.spec();
  in.u = &p.u;
  in.v = &p.v;
  in.generator = &p.generator;
  in.terminal_bound = p.terminal.bound;
  in.seed = cfg.solver.rng.seed;
  Eigen::MatrixXd xi;
  if (paths != nullptr) {
    xi = p.terminal.eval(*paths);
    in.terminal_samples = &xi;
  }
  in.barrier_samples = barrier;
  return validate_assumptions(in);
}

json norms(const Ensemble& e) {
  return {{"yS2sq", to_json(s2_estimate(e))}, {"zH2sq", to_json(h2_estimate(e))}};
}

void dump_stencils(const fs::path& out, const DelayedProblem& p) {
  const DelayOperator op = build_delay_operator(p);
  std::ofstream a(out / "stencil_alpha1.csv");
  write_stencil_csv(a, op.y_leg);
  std::ofstream b(out / "stencil_alpha2.csv");
  write_stencil_csv(b, op.z_leg);
}

json cmd_solve(const ExperimentConfig& cfg, const RunFlags& flags) {
  const DelayedSolution sol = solve(cfg.problem, cfg.solver);
  json j = header(cfg);
  j["contraction"] = to_json(sol.report);
  j["assumptions"] = to_json(assumptions(cfg, sol.ensemble.paths.get(), nullptr));
  j["y0"] = to_json(sol.y0);
  j["norms"] = norms(sol.ensemble);
  j["picard"] = to_json(sol.trace);
  j["warnings"] = sol.warnings;
  write_node_means_csv(flags.out / "results.csv", sol.ensemble);
  if (flags.dump_ensemble) {
    write_ensemble_csv(flags.out / "ensemble.csv", sol.ensemble);
    dump_stencils(flags.out, cfg.problem);
  }
  return j;
}

json cmd_reflected(const ExperimentConfig& cfg, const RunFlags& flags) {
  const ReflectedResult r = solve_reflected(cfg.problem, cfg.barrier, cfg.solver);
  json j = header(cfg);
  j["contraction"] = to_json(r.report);
  j["assumptions"] =
      to_json(assumptions(cfg, r.solution.ensemble.paths.get(), &r.solution.S));
  j["y0"] = to_json(r.y0);
  j["norms"] = norms(r.solution.ensemble);
  j["skorokhod"] = to_json(r.audit);
  j["picard"] = to_json(r.trace);
  j["warnings"] = r.warnings;
  const std::vector<ExtraSeries> extra{{"K", &r.solution.K}, {"S", &r.solution.S}};
  write_node_means_csv(flags.out / "results.csv", r.solution.ensemble, extra);
  if (flags.dump_ensemble) write_ensemble_csv(flags.out / "ensemble.csv", r.solution.ensemble, extra);
  return j;
}

json cmd_fbsde(const ExperimentConfig& cfg, const RunFlags& flags) {
  const CoupledProblem problem{cfg.problem.grid, cfg.problem.generator, cfg.problem.terminal,
                               cfg.problem.basis};
  FbsdeOptions fo;
  fo.paths = cfg.solver.paths;
  fo.rng = cfg.solver.rng;
  fo.tol = cfg.solver.tol;
  fo.max_iter = cfg.solver.max_iter;
  fo.clamp = cfg.clamp;
  const FbsdeResult r = solve_fbsde(problem, fo);
  json j = header(cfg);
  j["assumptions"] = to_json(assumptions(cfg, r.ensemble.paths.get(), nullptr));
  j["y0"] = to_json(r.y0);
  j["norms"] = norms(r.ensemble);
  j["picard"] = to_json(r.trace);
  j["clampActivations"] = r.clamp_activations;
  j["forwardResidual"] = r.forward_residual;
  j["valid"] = r.valid;
  j["bmo"] = to_json(bmo_diagnostic(r.ensemble, cfg.problem.basis));
  j["warnings"] = r.warnings;
  write_node_means_csv(flags.out / "results.csv", r.ensemble);
  if (flags.dump_ensemble) write_ensemble_csv(flags.out / "ensemble.csv", r.ensemble);
  return j;
}

json cmd_equivalence(const ExperimentConfig& cfg, const RunFlags&) {
  const EquivalenceReport r = equivalence_check(cfg.problem, cfg.solver);
  json j = header(cfg);
  j["contraction"] = to_json(r.report);
  j["equivalence"] = {{"s2Diff", r.s2_diff},
                      {"h2Diff", r.h2_diff},
                      {"tolerance", r.tolerance},
                      {"passed", r.passed}};
  j["y0"] = {{"delayed", to_json(r.delayed_y0)}, {"fbsde", to_json(r.fbsde_y0)}};
  j["picard"] = {{"delayed", to_json(r.delayed_trace)}, {"fbsde", to_json(r.fbsde_trace)}};
  j["warnings"] = r.warnings;
  return j;
}

json cmd_sweep(const ExperimentConfig& cfg, const RunFlags& flags) {
  const auto& base = cfg.problem;
  const double T = base.grid.horizon();
  MeasureFamily family;
  if (cfg.family_kind == "scaled") {
    family = [&](int n) {
      const double f = 1.0 - 1.0 / n;
      return std::make_pair(base.alpha1.scaled(f), base.alpha2.scaled(f));
    };
  } else {
    std::map<int, const FamilyMember*> by_n;
    for (const auto& m : cfg.family_members) by_n[m.n] = &m;
    family = [by_n, T](int n) {
      const FamilyMember* m = by_n.at(n);
      return std::make_pair(DelayMeasure(T, m->alpha1), DelayMeasure(T, m->alpha2));
    };
  }
  const SweepResult r = stability_sweep(base, family, cfg.family_n, cfg.solver);
  json j = header(cfg);
  j["contraction"] = to_json(check_contraction(base.generator.lipschitz_k, base.alpha1, base.alpha2,
                                               base.u, base.v, Variant::plain));
  j["base"] = {{"y0", to_json(r.base_y0)}, {"yS2sq", r.base_s2sq}, {"zH2sq", r.base_h2sq}};
  json rows = json::array();
  CsvWriter csv(flags.out / "results.csv",
                {"n", "gapY", "gapZ", "errS2sq", "errS2sqStderr", "errH2sq", "errH2sqStderr", "bound",
                 "y0", "y0Stderr", "gateOk", "orderY", "orderZ"});
  for (const auto& row : r.rows) {
    rows.push_back({{"n", row.n},
                    {"gapY", row.gap_y},
                    {"gapZ", row.gap_z},
                    {"errS2sq", to_json(row.err_s2sq)},
                    {"errH2sq", to_json(row.err_h2sq)},
                    {"bound", row.bound},
                    {"y0", to_json(row.y0)},
                    {"gateOk", row.gate_ok},
                    {"orderY", row.order_y},
                    {"orderZ", row.order_z},
                    {"error", row.error}});
    csv.row(row.n, row.gap_y, row.gap_z, row.err_s2sq.value, row.err_s2sq.std_error,
            row.err_h2sq.value, row.err_h2sq.std_error, row.bound, row.y0.value, row.y0.std_error,
            row.gate_ok ? "true" : "false", row.order_y, row.order_z);
  }
  j["rows"] = rows;
  j["warnings"] = r.warnings;
  return j;
}

json cmd_counterexample(const ExperimentConfig& cfg, const RunFlags& flags) {
  if (cfg.problem.grid.horizon() != 1.0)
    throw ConfigError("problem.grid.T", "the counterexample is defined on T = 1");
  const CounterexampleReport r =
      counterexample_run(cfg.solver.paths, cfg.problem.grid.steps(), cfg.solver);
  json j = header(cfg);
  j["contraction"] = to_json(r.report);
  j["y0"] = to_json(r.y0);
  j["y0Exact"] = std::exp(-0.2);
  j["ybar0"] = to_json(r.ybar0);
  j["maxCurveError"] = r.max_curve_error;
  j["maxYbarDeviation"] = r.max_ybar_deviation;
  j["picard"] = {{"delta0", to_json(r.trace)}, {"deltaMinus1", to_json(r.trace_bar)}};
  j["warnings"] = r.warnings;
  CsvWriter csv(flags.out / "results.csv", {"timeIndex", "t", "Y", "exact", "Ybar"});
  for (std::size_t i = 0; i < r.curve.size(); ++i)
    csv.row(i, r.curve[i].t, r.curve[i].y, r.curve[i].exact, r.curve[i].ybar);
  return j;
}

json cmd_check(const ExperimentConfig& cfg, const RunFlags&) {
  const auto& p = cfg.problem;
  const ContractionReport r =
      check_contraction(p.generator.lipschitz_k, p.alpha1, p.alpha2, p.u, p.v, cfg.variant);
  json j = header(cfg);
  j["contraction"] = to_json(r);
  j["assumptions"] = to_json(assumptions(cfg, nullptr, nullptr));
  j["warnings"] = r.warnings;
  return j;
}

json cmd_refine(const ExperimentConfig& cfg, const RunFlags& flags) {
  const RefinementResult r =
      refinement_study(cfg.problem, cfg.refine_n, cfg.refine_m, cfg.replications, cfg.solver);
  json j = header(cfg);
  j["reference"] = r.reference;
  j["timeOrder"] = r.time_order;
  j["mcSlope"] = r.mc_slope;
  json rows = json::array();
  CsvWriter csv(flags.out / "results.csv", {"N", "M", "rmse", "meanError", "y0Spread"});
  for (const auto& row : r.rows) {
    rows.push_back({{"N", row.steps},
                    {"M", row.paths},
                    {"rmse", row.rmse},
                    {"meanError", row.mean_error},
                    {"y0Spread", row.y0_spread}});
    csv.row(row.steps, row.paths, row.rmse, row.mean_error, row.y0_spread);
  }
  j["rows"] = rows;
  j["warnings"] = json::array();
  return j;
}

int fail(const char* kind, const std::exception& e, int code) {
  std::cerr << "tdbsde: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int run(const std::string& subcommand, const RunFlags& flags) {
  const auto names = subcommands();
  if (std::find(names.begin(), names.end(), subcommand) == names.end()) {
    std::cerr << "tdbsde: unknown subcommand '" << subcommand << "'\n";
    return kConfigError;
  }
  std::optional<ExperimentConfig> cfg;
  try {
    set_thread_count(flags.threads);
    cfg.emplace(load_config(subcommand, flags.config, flags.seed));
    fs::create_directories(flags.out);
    json summary;
    if (subcommand == "solve") summary = cmd_solve(*cfg, flags);
    else if (subcommand == "solve-reflected") summary = cmd_reflected(*cfg, flags);
    else if (subcommand == "solve-fbsde") summary = cmd_fbsde(*cfg, flags);
    else if (subcommand == "equivalence") summary = cmd_equivalence(*cfg, flags);
    else if (subcommand == "stability-sweep") summary = cmd_sweep(*cfg, flags);
    else if (subcommand == "counterexample") summary = cmd_counterexample(*cfg, flags);
    else if (subcommand == "check-contraction") summary = cmd_check(*cfg, flags);
    else summary = cmd_refine(*cfg, flags);
    write_json(flags.out / "summary.json", summary);
    return kOk;
  } catch (const ConfigError& e) {
    return fail("config error", e, kConfigError);
  } catch (const ContractionRefusal& e) {
    json j = header(*cfg);
    j["status"] = "refused";
    j["error"] = e.what();
    j["contraction"] = to_json(e.report());
    write_json(flags.out / "summary.json", j);
    return fail("refused", e, kGateRefusal);
  } catch (const GateRefusal& e) {
    return fail("refused", e, kGateRefusal);
  } catch (const NumericalError& e) {
    return fail("numerical failure", e, kNumericalFailure);
  } catch (const ResourceError& e) {
    return fail("numerical failure", e, kNumericalFailure);
  } catch (const UsageError& e) {
    return fail("config error", e, kConfigError);
  } catch (const DataError& e) {
    return fail("config error", e, kConfigError);
  } catch (const std::exception& e) {
    return fail("error", e, kNumericalFailure);
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Numerical solvers for time-delayed BSDEs"};
  std::string subcommand;
  std::string config;
  RunFlags flags;
  std::string out = "out";
  std::uint64_t seed = 0;
  app.add_option("subcommand", subcommand, "What to run")
      ->required()
      ->check(CLI::IsMember(subcommands()));
  app.add_option("--config", config, "Experiment config (JSON)");
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--threads", flags.threads, "Worker threads (0 = all cores)")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "Override solver.seed");
  app.add_flag("--dump-ensemble", flags.dump_ensemble, "Write every path to ensemble.csv");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  if (!config.empty()) flags.config = config;
  if (seed_opt->count() > 0) flags.seed = seed;
  flags.out = out;
  return run(subcommand, flags);
}

}  // namespace tdbsde::cli
