#pragma once

#include <cmath>
#include <functional>

namespace oracle {

// Adaptive Simpson on [a, b] to absolute tolerance tol.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-13,
                      int depth = 50) {
  struct Rec {
    const std::function<double(double)>& f;
    double run(double a, double b, double fa, double fm, double fb, double whole, double tol,
               int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6 * (fa + 4 * flm + fm);
      const double right = (b - m) / 6 * (fm + 4 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol)
        return left + right + (left + right - whole) / 15;
      return run(a, m, fa, flm, fm, left, tol / 2, depth - 1) +
             run(m, b, fm, frm, fb, right, tol / 2, depth - 1);
    }
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return Rec{f}.run(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, depth);
}

// E[h(sqrt(T) G)] for standard normal G by Simpson on [-12, 12].
inline double gaussian_expectation(const std::function<double(double)>& h, double T) {
  const double s = std::sqrt(T);
  const double c = 1.0 / std::sqrt(2.0 * M_PI);
  return simpson([&](double x) { return h(s * x) * c * std::exp(-0.5 * x * x); }, -12.0, 12.0,
                 1e-12);
}

}  // namespace oracle
