#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tdbsde/reflect.hpp"
#include "tdbsde/solver.hpp"

namespace tdbsde {

/// Named numeric parameters for a preset. Every key must be read; leftovers
/// are reported by `finish()` so typos do not pass silently.
class PresetParams {
 public:
  PresetParams() = default;
  explicit PresetParams(std::map<std::string, double> values) : values_(std::move(values)) {}

  double get(const std::string& key, double fallback);
  double require(const std::string& key);
  // Throws UsageError naming the first unread key.
  void finish() const;

 private:
  std::map<std::string, double> values_;
  std::set<std::string> read_;
};

namespace presets {

// g = 0.
GeneratorSpec zero(int m = 1, int d = 1);
// g_k = a gamma_y,k + b sum_j gamma_z,kj + c; K = max(|a|, |b| sqrt(d)).
GeneratorSpec linear(double a, double b, double c = 0.0, int m = 1, int d = 1);
// g = -(gamma_y + gamma_z) / 5. With delta_0 this is the equation whose
// solution is Y_t = exp(-(1 - t) / 5) for xi = 1.
GeneratorSpec counterexample();
// g = c_z |gamma_z|^2 + c_x gamma_y (quadratic in z).
GeneratorSpec quadratic(double cz, double cx);
// g = gamma_y + theta gamma_z; pair with alpha1 = uniform, u = cosine(M, P),
// alpha2 = delta_0, v = 1. Z here stands for Z sigma.
GeneratorSpec insurance(double theta);

TerminalSpec constant_terminal(double c, int m = 1);
// a W_T^1 + b
TerminalSpec brownian_terminal(double a, double b = 0.0, int m = 1);
// c tanh(a W_T + b), |xi| <= |c|
TerminalSpec tanh_terminal(double a, double b, double c);
// c sin(a W_T + b), |xi| <= |c|
TerminalSpec sin_terminal(double a, double b, double c);
// e^{-r T} (strike - exp(sigma W_T + (r - sigma^2 / 2) T))^+
TerminalSpec put_terminal(double strike, double sigma, double rate);

// S_t = e^{-r t} (strike - exp(sigma W_t + (r - sigma^2 / 2) t))^+
Barrier put_barrier(double strike, double sigma, double rate);

// Lookup by name for configs. Unknown names or parameters throw UsageError.
GeneratorSpec generator(const std::string& name, PresetParams params, int m, int d);
TerminalSpec terminal(const std::string& name, PresetParams params, int m);
Barrier barrier(const std::string& name, PresetParams params);

std::vector<std::string> generator_names();
std::vector<std::string> terminal_names();
std::vector<std::string> barrier_names();

/// The counterexample pair on T = 1: delta_0 measures (strong_delay = false)
/// or delta_{-1} (strong_delay = true), unit weights, xi = 1.
DelayedProblem counterexample_problem(int steps, bool strong_delay = false);

}  // namespace presets
}  // namespace tdbsde
