#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tdbsde/cli.hpp"
#include "tdbsde/presets.hpp"

namespace tdbsde::cli {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Read-tracking view of one JSON object. Keys that are never read are
/// rejected by finish().
class Obj {
 public:
  Obj(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ != nullptr && !j_->is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  bool present() const { return j_ != nullptr; }
  bool has(const std::string& key) const { return j_ != nullptr && j_->contains(key); }
  std::string at(const std::string& key) const { return join(path_, key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (j_ == nullptr) return nullptr;
    const auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }

  Obj child(const std::string& key) { return Obj(raw(key), at(key)); }

  double number(const std::string& key, double fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(at(key), "expected a finite number");
    return x;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) {
      seen_.insert(key);
      return std::nullopt;
    }
    return number(key, 0.0);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const std::int64_t x = v->get<std::int64_t>();
    if (x < lo) throw ConfigError(at(key), "must be >= " + std::to_string(lo));
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_unsigned()) throw ConfigError(at(key), "expected a nonnegative integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      const auto& e = (*v)[k];
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        throw ConfigError(at(key) + "[" + std::to_string(k) + "]", "expected a finite number");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> fallback,
                                     std::int64_t lo) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_array() || v->empty()) throw ConfigError(at(key), "expected a non-empty array of integers");
    std::vector<std::int64_t> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      const auto& e = (*v)[k];
      const std::string p = at(key) + "[" + std::to_string(k) + "]";
      if (!e.is_number_integer()) throw ConfigError(p, "expected an integer");
      if (e.get<std::int64_t>() < lo) throw ConfigError(p, "must be >= " + std::to_string(lo));
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }

  void finish() const {
    if (j_ == nullptr) return;
    for (const auto& [key, value] : j_->items())
      if (!seen_.contains(key)) throw ConfigError(at(key), "unknown key");
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_horizon(Obj& grid) {
  const json* v = grid.raw("T");
  if (v == nullptr) return 1.0;
  if (v->is_string()) {
    const std::string s = lower(v->get<std::string>());
    if (s == "inf" || s == "+inf" || s == "infinity" || s == "+infinity")
      throw ConfigError(grid.at("T"),
                        "infinite horizon is not supported; the solver is restricted to a finite "
                        "horizon T > 0");
    throw ConfigError(grid.at("T"), "expected a finite number");
  }
  if (!v->is_number()) throw ConfigError(grid.at("T"), "expected a finite number");
  const double T = v->get<double>();
  if (!std::isfinite(T))
    throw ConfigError(grid.at("T"), "infinite horizon is not supported; T must be finite");
  if (!(T > 0.0)) throw ConfigError(grid.at("T"), "T must be > 0");
  return T;
}

// Measure forms: {"dirac": r, "mass": w}, {"uniform": level},
// {"atoms": [{"at": r, "mass": w}], "density": {"breakpoints": [...], "levels": [...]}}.
MeasureSpec parse_measure(Obj o, double T, json& echo) {
  MeasureSpec spec;
  if (o.has("dirac")) {
    spec.atoms.push_back({o.number("dirac", 0.0), o.number("mass", 1.0)});
  } else if (o.has("uniform")) {
    spec.density = {{-T, 0.0}, {o.number("uniform", 1.0)}};
  } else {
    const json* atoms = o.raw("atoms");
    if (atoms != nullptr) {
      if (!atoms->is_array()) throw ConfigError(o.at("atoms"), "expected an array");
      for (std::size_t k = 0; k < atoms->size(); ++k) {
        Obj a(&(*atoms)[k], o.at("atoms") + "[" + std::to_string(k) + "]");
        if (!a.has("at")) throw ConfigError(a.at("at"), "missing atom location");
        spec.atoms.push_back({a.number("at", 0.0), a.number("mass", 1.0)});
        a.finish();
      }
    }
    Obj d = o.child("density");
    if (d.present()) {
      spec.density.breakpoints = d.numbers("breakpoints", {});
      spec.density.levels = d.numbers("levels", {});
      d.finish();
    }
  }
  o.finish();
  if (auto defect = measure_defect(T, spec)) throw ConfigError(o.path(), *defect);

  echo = json::object();
  echo["atoms"] = json::array();
  for (const auto& a : spec.atoms) echo["atoms"].push_back({{"at", a.location}, {"mass", a.mass}});
  if (!spec.density.empty())
    echo["density"] = {{"breakpoints", spec.density.breakpoints}, {"levels", spec.density.levels}};
  return spec;
}

WeightFunction parse_weight(Obj o, double T, json& echo) {
  const std::string kind = o.string("kind", "constant");
  try {
    WeightFunction w = [&] {
      if (kind == "constant") {
        const double c = o.number("value", 1.0);
        echo = {{"kind", kind}, {"value", c}};
        return WeightFunction::constant(T, c);
      }
      if (kind == "cosine") {
        const double amp = o.number("amplitude", 1.0);
        const double period = o.number("period", 1.0);
        echo = {{"kind", kind}, {"amplitude", amp}, {"period", period}};
        return WeightFunction::cosine(T, amp, period);
      }
      if (kind == "polynomial") {
        auto c = o.numbers("coeffs", {1.0});
        echo = {{"kind", kind}, {"coeffs", c}};
        return WeightFunction::polynomial(T, std::move(c));
      }
      if (kind == "tabulated") {
        auto t = o.numbers("times", {});
        auto v = o.numbers("values", {});
        echo = {{"kind", kind}, {"times", t}, {"values", v}};
        return WeightFunction::tabulated(T, std::move(t), std::move(v));
      }
      throw ConfigError(o.at("kind"),
                        "unknown weight kind '" + kind + "' (constant, cosine, polynomial, tabulated)");
    }();
    o.finish();
    return w;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(o.path(), e.what());
  }
}

std::map<std::string, double> read_params(const json* j, const std::string& path, json& echo) {
  std::map<std::string, double> out;
  echo = json::object();
  if (j == nullptr) return out;
  if (!j->is_object()) throw ConfigError(path, "expected an object of numbers");
  for (const auto& [key, value] : j->items()) {
    if (!value.is_number() || !std::isfinite(value.get<double>()))
      throw ConfigError(join(path, key), "expected a finite number");
    out[key] = value.get<double>();
    echo[key] = value.get<double>();
  }
  return out;
}

// Preset lookups report either a bad name or a bad parameter.
std::string preset_error_path(const Obj& o, const UsageError& e) {
  const std::string what = e.what();
  const bool param = what.rfind("unknown parameter", 0) == 0 || what.rfind("missing parameter", 0) == 0;
  return o.at(param ? "params" : "preset");
}

}  // namespace

ExperimentConfig parse_config(const std::string& command, const json& raw,
                              std::optional<std::uint64_t> seed_override) {
  Obj root(&raw, "");
  const std::string schema = root.string("schema", kSchema);
  if (schema != kSchema)
    throw ConfigError("schema", "unsupported schema '" + schema + "', expected '" + kSchema + "'");
  json echo = json::object();
  echo["schema"] = kSchema;

  // problem
  Obj problem = root.child("problem");
  Obj grid = problem.child("grid");
  const double T = parse_horizon(grid);
  const auto N = grid.integer("N", 100, 1);
  grid.finish();

  Obj dims = problem.child("dims");
  const int m = static_cast<int>(dims.integer("m", 1, 1));
  const int d = static_cast<int>(dims.integer("d", 1, 1));
  dims.finish();

  Obj gen = problem.child("generator");
  const std::string gname = gen.string("preset", "counterexample");
  json gparams_echo;
  const auto gparams = read_params(gen.raw("params"), gen.at("params"), gparams_echo);
  const auto declared_k = gen.optional_number("K");
  gen.finish();
  GeneratorSpec generator;
  try {
    generator = presets::generator(gname, PresetParams(gparams), m, d);
  } catch (const UsageError& e) {
    throw ConfigError(preset_error_path(gen, e), e.what());
  }
  if (declared_k) {
    if (*declared_k < generator.lipschitz_k * (1.0 - 1e-12))
      throw ConfigError(gen.at("K"), "declared K is below the preset's Lipschitz constant " +
                                         std::to_string(generator.lipschitz_k));
    generator.lipschitz_k = *declared_k;
  }

  Obj term = problem.child("terminal");
  const std::string tname = term.string("preset", "constant");
  json tparams_echo;
  const auto tparams = read_params(term.raw("params"), term.at("params"), tparams_echo);
  term.finish();
  TerminalSpec terminal;
  try {
    terminal = presets::terminal(tname, PresetParams(tparams), m);
  } catch (const UsageError& e) {
    throw ConfigError(preset_error_path(term, e), e.what());
  }

  Obj measures = problem.child("measures");
  json a1_echo, a2_echo;
  const bool uniform_default = command == "equivalence";
  const json a1_default = uniform_default ? json{{"uniform", 1.0}} : json{{"dirac", 0.0}};
  const json a2_default = json{{"dirac", 0.0}};
  const json* a1_raw = measures.raw("alpha1");
  const json* a2_raw = measures.raw("alpha2");
  MeasureSpec a1 = parse_measure(Obj(a1_raw ? a1_raw : &a1_default, measures.at("alpha1")), T, a1_echo);
  MeasureSpec a2 = parse_measure(Obj(a2_raw ? a2_raw : &a2_default, measures.at("alpha2")), T, a2_echo);
  measures.finish();

  Obj weights = problem.child("weights");
  json u_echo, v_echo;
  WeightFunction u = parse_weight(weights.child("u"), T, u_echo);
  WeightFunction v = parse_weight(weights.child("v"), T, v_echo);
  weights.finish();

  // solver
  Obj solver = root.child("solver");
  SolveOptions opts;
  opts.paths = solver.integer("paths", 10000, 1);
  opts.rng.seed = solver.unsigned_integer("seed", 1);
  if (seed_override) opts.rng.seed = *seed_override;
  opts.rng.stream_offset = solver.unsigned_integer("streamOffset", 0);
  BasisSpec basis;
  basis.degree = static_cast<int>(solver.integer("basisDegree", 3, 0));
  basis.augment_delay_state = solver.boolean("augmentDelayState", false);
  opts.tol = solver.number("tol", 1e-4);
  if (opts.tol < 0) throw ConfigError(solver.at("tol"), "must be >= 0");
  opts.max_iter = static_cast<int>(solver.integer("maxIter", 50, 1));
  opts.override_gate = solver.boolean("override", false);
  solver.finish();

  problem.finish();

  // command-specific blocks
  Obj barrier = root.child("barrier");
  const std::string bname = barrier.string("preset", "constant");
  json bparams_echo;
  auto bparams = read_params(barrier.raw("params"), barrier.at("params"), bparams_echo);
  barrier.finish();
  if (bname == "constant" && !bparams.contains("value")) {
    bparams["value"] = -1e6;
    bparams_echo["value"] = -1e6;
  }
  Barrier barrier_spec;
  try {
    barrier_spec = presets::barrier(bname, PresetParams(bparams));
  } catch (const UsageError& e) {
    throw ConfigError(preset_error_path(barrier, e), e.what());
  }

  Obj contraction = root.child("contraction");
  const std::string variant = contraction.string("variant", "plain");
  if (variant != "plain" && variant != "reflected")
    throw ConfigError(contraction.at("variant"), "expected 'plain' or 'reflected'");
  contraction.finish();

  Obj fb = root.child("fbsde");
  const double clamp = fb.number("clamp", 1e3);
  if (!(clamp > 0)) throw ConfigError(fb.at("clamp"), "must be > 0");
  fb.finish();

  Obj family = root.child("family");
  const std::string fkind = family.string("kind", "scaled");
  std::vector<int> fam_n;
  std::vector<FamilyMember> members;
  json members_echo = json::array();
  if (fkind == "scaled") {
    for (auto n : family.integers("n", {2, 4, 8, 16, 32}, 1)) fam_n.push_back(static_cast<int>(n));
  } else if (fkind == "explicit") {
    const json* list = family.raw("members");
    if (list == nullptr || !list->is_array() || list->empty())
      throw ConfigError(family.at("members"), "expected a non-empty array of members");
    for (std::size_t k = 0; k < list->size(); ++k) {
      Obj mem(&(*list)[k], family.at("members") + "[" + std::to_string(k) + "]");
      FamilyMember fm;
      fm.n = static_cast<int>(mem.integer("n", static_cast<std::int64_t>(k + 1), 1));
      json e1, e2;
      fm.alpha1 = parse_measure(mem.child("alpha1"), T, e1);
      fm.alpha2 = parse_measure(mem.child("alpha2"), T, e2);
      mem.finish();
      fam_n.push_back(fm.n);
      members_echo.push_back({{"n", fm.n}, {"alpha1", e1}, {"alpha2", e2}});
      members.push_back(std::move(fm));
    }
  } else {
    throw ConfigError(family.at("kind"), "expected 'scaled' or 'explicit'");
  }
  family.finish();

  Obj refine = root.child("refine");
  std::vector<int> rn;
  for (auto n : refine.integers("N", {25, 50, 100, 200}, 1)) rn.push_back(static_cast<int>(n));
  std::vector<Index> rm;
  for (auto x : refine.integers("M", {opts.paths}, 1)) rm.push_back(static_cast<Index>(x));
  const int reps = static_cast<int>(refine.integer("replications", 1, 1));
  refine.finish();

  root.finish();

  DelayedProblem p{TimeGrid(T, static_cast<int>(N)),
                   std::move(generator),
                   std::move(terminal),
                   DelayMeasure(T, std::move(a1)),
                   DelayMeasure(T, std::move(a2)),
                   std::move(u),
                   std::move(v),
                   basis};
  ExperimentConfig cfg(std::move(p));
  cfg.command = command;
  cfg.solver = opts;
  cfg.barrier = std::move(barrier_spec);
  cfg.variant = variant == "plain" ? Variant::plain : Variant::reflected;
  cfg.clamp = clamp;
  cfg.family_kind = fkind;
  cfg.family_n = std::move(fam_n);
  cfg.family_members = std::move(members);
  cfg.refine_n = std::move(rn);
  cfg.refine_m = std::move(rm);
  cfg.replications = reps;

  json pe;
  pe["grid"] = {{"T", T}, {"N", N}};
  pe["dims"] = {{"m", m}, {"d", d}};
  pe["generator"] = {{"preset", gname}, {"params", gparams_echo}, {"K", cfg.problem.generator.lipschitz_k}};
  pe["terminal"] = {{"preset", tname}, {"params", tparams_echo}};
  pe["measures"] = {{"alpha1", a1_echo}, {"alpha2", a2_echo}};
  pe["weights"] = {{"u", u_echo}, {"v", v_echo}};
  echo["problem"] = pe;
  echo["solver"] = {{"paths", opts.paths},
                    {"seed", opts.rng.seed},
                    {"streamOffset", opts.rng.stream_offset},
                    {"basisDegree", basis.degree},
                    {"augmentDelayState", basis.augment_delay_state},
                    {"tol", opts.tol},
                    {"maxIter", opts.max_iter},
                    {"override", opts.override_gate}};
  echo["barrier"] = {{"preset", bname}, {"params", bparams_echo}};
  echo["contraction"] = {{"variant", variant}};
  echo["fbsde"] = {{"clamp", clamp}};
  if (fkind == "scaled")
    echo["family"] = {{"kind", fkind}, {"n", cfg.family_n}};
  else
    echo["family"] = {{"kind", fkind}, {"members", members_echo}};
  echo["refine"] = {{"N", cfg.refine_n}, {"M", cfg.refine_m}, {"replications", reps}};
  cfg.echo = std::move(echo);
  return cfg;
}

ExperimentConfig load_config(const std::string& command,
                             const std::optional<std::filesystem::path>& file,
                             std::optional<std::uint64_t> seed_override) {
  if (!file) return parse_config(command, json::object(), seed_override);
  std::ifstream in(*file);
  if (!in) throw ConfigError(file->string(), "cannot open config file");
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file->string(), std::string("not valid JSON: ") + e.what());
  }
  if (!raw.is_object()) throw ConfigError(file->string(), "top level must be an object");
  return parse_config(command, raw, seed_override);
}

}  // namespace tdbsde::cli
