#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

struct MeanAndError {
  double mean;
  double std_error;
};

// E[max_i W_{t_i}^2] on a uniform grid, by direct simulation with a
// generator unrelated to the library's.
inline MeanAndError sup_square_of_brownian(double T, int n, int paths, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(T / n));
  double sum = 0.0, sumsq = 0.0;
  for (int p = 0; p < paths; ++p) {
    double w = 0.0, best = 0.0;
    for (int i = 0; i < n; ++i) {
      w += normal(gen);
      best = std::max(best, w * w);
    }
    sum += best;
    sumsq += best * best;
  }
  const double mean = sum / paths;
  const double var = (sumsq - paths * mean * mean) / (paths - 1);
  return {mean, std::sqrt(var / paths)};
}

}  // namespace oracle
