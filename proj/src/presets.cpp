#include "tdbsde/presets.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tdbsde {

double PresetParams::get(const std::string& key, double fallback) {
  read_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double PresetParams::require(const std::string& key) {
  read_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("missing parameter '" + key + "'");
  return it->second;
}

void PresetParams::finish() const {
  for (const auto& [key, value] : values_)
    if (!read_.contains(key)) throw UsageError("unknown parameter '" + key + "'");
}

namespace presets {

namespace {

std::string fmt(const char* name, std::initializer_list<double> args) {
  std::ostringstream os;
  os << name << "(";
  bool first = true;
  for (double a : args) {
    if (!first) os << ", ";
    os << a;
    first = false;
  }
  os << ")";
  return os.str();
}

Eigen::VectorXd terminal_w(const Paths& p) { return p.W.back().col(0); }

}  // namespace

GeneratorSpec zero(int m, int d) {
  GeneratorSpec g{"zero", m, d, 0.0, GrowthClass::lipschitz, nullptr};
  g.eval = [m](double, const Eigen::MatrixXd& gy, const Eigen::MatrixXd&, const Eigen::MatrixXd&) {
    return Eigen::MatrixXd::Zero(gy.rows(), m).eval();
  };
  return g;
}

GeneratorSpec linear(double a, double b, double c, int m, int d) {
  GeneratorSpec g{fmt("linear", {a, b, c}), m, d,
                  std::max(std::abs(a), std::abs(b) * std::sqrt(static_cast<double>(d))),
                  GrowthClass::lipschitz, nullptr};
  g.eval = [a, b, c, m, d](double, const Eigen::MatrixXd& gy, const Eigen::MatrixXd& gz,
                           const Eigen::MatrixXd&) {
    Eigen::MatrixXd out = a * gy;
    for (int k = 0; k < m; ++k) out.col(k) += b * gz.middleCols(k * d, d).rowwise().sum();
    out.array() += c;
    return out;
  };
  return g;
}

GeneratorSpec counterexample() {
  GeneratorSpec g = linear(-0.2, -0.2);
  g.name = "counterexample";
  return g;
}

GeneratorSpec quadratic(double cz, double cx) {
  GeneratorSpec g{fmt("quadratic", {cz, cx}), 1, 1, std::abs(cx), GrowthClass::quadratic, nullptr};
  g.eval = [cz, cx](double, const Eigen::MatrixXd& gy, const Eigen::MatrixXd& gz,
                    const Eigen::MatrixXd&) {
    return (cz * gz.array().square() + cx * gy.array()).matrix().eval();
  };
  return g;
}

GeneratorSpec insurance(double theta) {
  GeneratorSpec g = linear(1.0, theta);
  g.name = fmt("insurance", {theta});
  return g;
}

TerminalSpec constant_terminal(double c, int m) {
  return {fmt("constant", {c}), m,
          [c, m](const Paths& p) { return Eigen::MatrixXd::Constant(p.path_count, m, c).eval(); },
          std::abs(c)};
}

TerminalSpec brownian_terminal(double a, double b, int m) {
  return {fmt("brownian", {a, b}), m,
          [a, b, m](const Paths& p) {
            Eigen::MatrixXd out(p.path_count, m);
            out.colwise() = ((a * terminal_w(p)).array() + b).matrix();
            return out;
          },
          a == 0.0 ? std::optional<double>(std::abs(b)) : std::nullopt};
}

TerminalSpec tanh_terminal(double a, double b, double c) {
  return {fmt("tanh", {a, b, c}), 1,
          [a, b, c](const Paths& p) {
            return Eigen::MatrixXd(c * (a * terminal_w(p).array() + b).tanh());
          },
          std::abs(c)};
}

TerminalSpec sin_terminal(double a, double b, double c) {
  return {fmt("sin", {a, b, c}), 1,
          [a, b, c](const Paths& p) {
            return Eigen::MatrixXd(c * (a * terminal_w(p).array() + b).sin());
          },
          std::abs(c)};
}

namespace {
Eigen::VectorXd put_payoff(const Eigen::VectorXd& w, double t, double strike, double sigma,
                           double rate) {
  const Eigen::ArrayXd spot = (sigma * w.array() + (rate - 0.5 * sigma * sigma) * t).exp();
  return (std::exp(-rate * t) * (strike - spot).max(0.0)).matrix();
}
}  // namespace

TerminalSpec put_terminal(double strike, double sigma, double rate) {
  return {fmt("put", {strike, sigma, rate}), 1,
          [=](const Paths& p) {
            return Eigen::MatrixXd(put_payoff(terminal_w(p), p.grid.horizon(), strike, sigma, rate));
          },
          std::abs(strike)};
}

Barrier put_barrier(double strike, double sigma, double rate) {
  return {fmt("put", {strike, sigma, rate}), [=](const Paths& p, int i) {
            return put_payoff(p.W[static_cast<std::size_t>(i)].col(0), p.grid.node(i), strike, sigma,
                              rate);
          }};
}

GeneratorSpec generator(const std::string& name, PresetParams params, int m, int d) {
  GeneratorSpec g;
  const auto one_dim = [&] {
    if (m != 1 || d != 1) throw UsageError("preset '" + name + "' needs m = d = 1");
  };
  if (name == "zero") {
    g = zero(m, d);
  } else if (name == "linear") {
    g = linear(params.get("a", 0.0), params.get("b", 0.0), params.get("c", 0.0), m, d);
  } else if (name == "counterexample") {
    one_dim();
    g = counterexample();
  } else if (name == "quadratic") {
    one_dim();
    g = quadratic(params.get("cz", 0.25), params.get("cx", 0.1));
  } else if (name == "insurance") {
    one_dim();
    g = insurance(params.get("theta", 0.0));
  } else {
    throw UsageError("unknown generator preset '" + name + "'");
  }
  params.finish();
  return g;
}

TerminalSpec terminal(const std::string& name, PresetParams params, int m) {
  TerminalSpec t;
  const auto one_dim = [&] {
    if (m != 1) throw UsageError("terminal preset '" + name + "' needs m = 1");
  };
  if (name == "constant") {
    t = constant_terminal(params.get("value", 1.0), m);
  } else if (name == "brownian") {
    t = brownian_terminal(params.get("a", 1.0), params.get("b", 0.0), m);
  } else if (name == "tanh") {
    one_dim();
    t = tanh_terminal(params.get("a", 1.0), params.get("b", 0.0), params.get("c", 1.0));
  } else if (name == "sin") {
    one_dim();
    t = sin_terminal(params.get("a", 1.0), params.get("b", 0.0), params.get("c", 1.0));
  } else if (name == "put") {
    one_dim();
    t = put_terminal(params.get("strike", 1.1), params.get("sigma", 0.5), params.get("rate", 0.2));
  } else {
    throw UsageError("unknown terminal preset '" + name + "'");
  }
  params.finish();
  return t;
}

Barrier barrier(const std::string& name, PresetParams params) {
  Barrier b;
  if (name == "constant") {
    b = Barrier::constant(params.get("value", 0.0));
  } else if (name == "put") {
    b = put_barrier(params.get("strike", 1.1), params.get("sigma", 0.5), params.get("rate", 0.2));
  } else {
    throw UsageError("unknown barrier preset '" + name + "'");
  }
  params.finish();
  return b;
}

std::vector<std::string> generator_names() {
  return {"zero", "linear", "counterexample", "quadratic", "insurance"};
}
std::vector<std::string> terminal_names() { return {"constant", "brownian", "tanh", "sin", "put"}; }
std::vector<std::string> barrier_names() { return {"constant", "put"}; }

DelayedProblem counterexample_problem(int steps, bool strong_delay) {
  const double T = 1.0;
  const double at = strong_delay ? -1.0 : 0.0;
  return {TimeGrid(T, steps),
          counterexample(),
          constant_terminal(1.0),
          DelayMeasure::dirac(T, at),
          DelayMeasure::dirac(T, at),
          WeightFunction::constant(T, 1.0),
          WeightFunction::constant(T, 1.0),
          BasisSpec{}};
}

}  // namespace presets
}  // namespace tdbsde
