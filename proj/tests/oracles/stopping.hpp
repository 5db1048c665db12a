#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Every stopping rule on a non-recombining binomial tree of depth n, valued
// recursively: stopping at level k < n pays barrier, continuing pays
// driver * dt plus the average of the two children, level n pays terminal.
// Returns the value of every rule at the root (1, 2, 5, 26, 677 rules for
// n = 0..4).
struct StoppingTree {
  double horizon;
  int levels;
  std::function<double(double, double)> driver;
  std::function<double(double, double)> barrier;
  std::function<double(double)> terminal;

  std::vector<double> all_values() const { return values(0, 0); }

  double best() const {
    const auto v = all_values();
    return *std::max_element(v.begin(), v.end());
  }

 private:
  // Node at level k reached with j up-moves.
  std::vector<double> values(int k, int j) const {
    const double dt = horizon / levels;
    const double h = std::sqrt(dt);
    const double w = (2 * j - k) * h;
    if (k == levels) return {terminal(w)};
    const auto up = values(k + 1, j + 1);
    const auto down = values(k + 1, j);
    std::vector<double> out{barrier(k * dt, w)};
    const double g = driver(k * dt, w) * dt;
    for (double a : up)
      for (double b : down) out.push_back(g + 0.5 * (a + b));
    return out;
  }
};

}  // namespace oracle
