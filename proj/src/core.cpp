#include "tdbsde/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tdbsde {

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps), dt_(0.0) {
  if (std::isinf(horizon))
    throw UsageError("TimeGrid: infinite horizon is not supported; T must be finite");
  if (!std::isfinite(horizon) || horizon <= 0.0)
    throw UsageError("TimeGrid: horizon must be a finite positive number");
  if (steps < 1) throw UsageError("TimeGrid: steps must be >= 1");
  dt_ = horizon / static_cast<double>(steps);
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> out(static_cast<std::size_t>(steps_ + 1));
  for (int i = 0; i <= steps_; ++i) out[static_cast<std::size_t>(i)] = node(i);
  return out;
}

int TimeGrid::floor_index(double t) const noexcept {
  const double x = t / dt_;
  if (x < -1e-9) return -1;
  const auto i = static_cast<int>(std::floor(x + 1e-9));
  return std::clamp(i, 0, steps_);
}

// ---------------------------------------------------------------------------
// DelayMeasure

namespace {

double location_tolerance(double horizon) { return 1e-12 * std::max(1.0, horizon); }

}  // namespace

std::optional<std::string> measure_defect(double horizon, const MeasureSpec& spec) {
  const double tol = location_tolerance(horizon);
  std::ostringstream why;
  for (std::size_t k = 0; k < spec.atoms.size(); ++k) {
    const auto& a = spec.atoms[k];
    if (!std::isfinite(a.location) || !std::isfinite(a.mass)) {
      why << "atom " << k << " is not finite";
      return why.str();
    }
    if (a.mass < 0.0) {
      why << "atom " << k << " has negative mass " << a.mass;
      return why.str();
    }
    if (a.location < -horizon - tol || a.location > tol) {
      why << "atom " << k << " at " << a.location << " lies outside [-" << horizon << ", 0]";
      return why.str();
    }
  }
  const auto& dens = spec.density;
  if (dens.levels.empty() && dens.breakpoints.empty()) return std::nullopt;
  if (dens.breakpoints.size() != dens.levels.size() + 1)
    return std::string("density needs exactly one more breakpoint than levels");
  for (std::size_t k = 0; k < dens.breakpoints.size(); ++k) {
    const double b = dens.breakpoints[k];
    if (!std::isfinite(b)) return std::string("density breakpoint is not finite");
    if (b < -horizon - tol || b > tol) {
      why << "density breakpoint " << b << " lies outside [-" << horizon << ", 0]";
      return why.str();
    }
    if (k > 0 && !(b > dens.breakpoints[k - 1]))
      return std::string("density breakpoints must be strictly increasing");
  }
  for (double level : dens.levels) {
    if (!std::isfinite(level)) return std::string("density level is not finite");
    if (level < 0.0) {
      why << "density level " << level << " is negative";
      return why.str();
    }
  }
  return std::nullopt;
}

DelayMeasure::DelayMeasure(double horizon, MeasureSpec spec)
    : horizon_(horizon), spec_(std::move(spec)) {
  if (!std::isfinite(horizon) || horizon <= 0.0)
    throw UsageError("DelayMeasure: horizon must be finite and positive");
  if (auto defect = measure_defect(horizon, spec_)) throw DataError("DelayMeasure: " + *defect);
  const auto& dens = spec_.density;
  cumulative_.assign(dens.breakpoints.size(), 0.0);
  for (std::size_t k = 0; k < dens.levels.size(); ++k)
    cumulative_[k + 1] =
        cumulative_[k] + dens.levels[k] * (dens.breakpoints[k + 1] - dens.breakpoints[k]);
}

DelayMeasure DelayMeasure::dirac(double horizon, double location, double mass) {
  return DelayMeasure(horizon, MeasureSpec{{Atom{location, mass}}, {}});
}

DelayMeasure DelayMeasure::uniform(double horizon, double level) {
  return DelayMeasure(horizon, MeasureSpec{{}, PiecewiseDensity{{-horizon, 0.0}, {level}}});
}

DelayMeasure DelayMeasure::zero(double horizon) { return DelayMeasure(horizon, MeasureSpec{}); }

double DelayMeasure::total_mass() const { return mass(-horizon_, 0.0); }

double DelayMeasure::density_mass(double a, double b) const {
  const auto& bp = spec_.density.breakpoints;
  if (spec_.density.levels.empty() || !(b > a)) return 0.0;
  auto cumulative_at = [&](double x) {
    if (x <= bp.front()) return 0.0;
    if (x >= bp.back()) return cumulative_.back();
    const auto it = std::upper_bound(bp.begin(), bp.end(), x);
    const auto k = static_cast<std::size_t>(std::distance(bp.begin(), it) - 1);
    return cumulative_[k] + spec_.density.levels[k] * (x - bp[k]);
  };
  return cumulative_at(b) - cumulative_at(a);
}

double DelayMeasure::mass(double a, double b) const {
  if (b < a) return 0.0;
  const double tol = location_tolerance(horizon_);
  double total = density_mass(a, b);
  for (const auto& atom : spec_.atoms)
    if (atom.location >= a - tol && atom.location <= b + tol) total += atom.mass;
  return total;
}

DelayMeasure DelayMeasure::scaled(double factor) const {
  if (!std::isfinite(factor) || factor < 0.0)
    throw UsageError("DelayMeasure::scaled: factor must be finite and nonnegative");
  MeasureSpec s = spec_;
  for (auto& a : s.atoms) a.mass *= factor;
  for (auto& l : s.density.levels) l *= factor;
  return DelayMeasure(horizon_, std::move(s));
}

MeasureOrder compare_measures(const DelayMeasure& alpha, const DelayMeasure& beta) {
  if (alpha.horizon() != beta.horizon())
    throw UsageError("compare_measures: measures live on different horizons");
  const double tol = location_tolerance(alpha.horizon());
  const double mass_tol = 1e-14 * std::max(1.0, std::max(alpha.total_mass(), beta.total_mass()));
  bool some_less = false;
  bool some_greater = false;
  auto record = [&](double diff) {
    if (diff > mass_tol) some_greater = true;
    if (diff < -mass_tol) some_less = true;
  };

  std::vector<double> locations;
  for (const auto& a : alpha.atoms()) locations.push_back(a.location);
  for (const auto& a : beta.atoms()) locations.push_back(a.location);
  std::sort(locations.begin(), locations.end());
  auto atom_mass = [&](const DelayMeasure& mu, double loc) {
    double s = 0.0;
    for (const auto& a : mu.atoms())
      if (std::abs(a.location - loc) <= tol) s += a.mass;
    return s;
  };
  for (std::size_t k = 0; k < locations.size(); ++k) {
    if (k > 0 && locations[k] - locations[k - 1] <= tol) continue;
    record(atom_mass(alpha, locations[k]) - atom_mass(beta, locations[k]));
  }

  std::vector<double> cuts{-alpha.horizon(), 0.0};
  for (double b : alpha.density().breakpoints) cuts.push_back(b);
  for (double b : beta.density().breakpoints) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k];
    const double hi = cuts[k + 1];
    if (hi - lo <= tol) continue;
    const double width = hi - lo;
    record((alpha.density_mass(lo, hi) - beta.density_mass(lo, hi)) / width);
  }

  if (some_less && some_greater) return MeasureOrder::unordered;
  if (some_less) return MeasureOrder::less_equal;
  if (some_greater) return MeasureOrder::greater_equal;
  return MeasureOrder::equal;
}

// ---------------------------------------------------------------------------
// WeightFunction

WeightFunction::WeightFunction(Kind kind, double horizon, std::vector<double> params,
                               std::vector<double> times)
    : kind_(kind), horizon_(horizon), params_(std::move(params)), times_(std::move(times)) {
  if (!std::isfinite(horizon) || horizon <= 0.0)
    throw UsageError("WeightFunction: horizon must be finite and positive");
  for (double p : params_)
    if (!std::isfinite(p)) throw DataError("WeightFunction: non-finite parameter or value");
}

WeightFunction WeightFunction::constant(double horizon, double value) {
  return WeightFunction(Kind::constant, horizon, {value});
}

WeightFunction WeightFunction::cosine(double horizon, double amplitude, double period) {
  if (!(period > 0.0)) throw UsageError("WeightFunction::cosine: period must be positive");
  return WeightFunction(Kind::cosine, horizon, {amplitude, period});
}

WeightFunction WeightFunction::polynomial(double horizon, std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  return WeightFunction(Kind::polynomial, horizon, std::move(coeffs));
}

WeightFunction WeightFunction::tabulated(double horizon, std::vector<double> times,
                                         std::vector<double> values) {
  if (times.size() != values.size() || times.size() < 2)
    throw DataError("WeightFunction::tabulated: need >= 2 (time, value) pairs");
  for (double t : times)
    if (!std::isfinite(t)) throw DataError("WeightFunction::tabulated: non-finite time");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw DataError("WeightFunction::tabulated: times must be strictly increasing");
  const double tol = 1e-12 * std::max(1.0, horizon);
  if (std::abs(times.front()) > tol || std::abs(times.back() - horizon) > tol)
    throw DataError("WeightFunction::tabulated: times must span [0, T]");
  return WeightFunction(Kind::tabulated, horizon, std::move(values), std::move(times));
}

namespace {

double horner(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
  return acc;
}

std::vector<double> antiderivative(const std::vector<double>& c) {
  std::vector<double> out(c.size() + 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) out[k + 1] = c[k] / static_cast<double>(k + 1);
  return out;
}

// Real roots of the polynomial strictly inside (lo, hi), ascending.
std::vector<double> real_roots_in(std::vector<double> c, double lo, double hi) {
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  const auto n = static_cast<Index>(c.size()) - 1;
  std::vector<double> roots;
  if (n < 1) return roots;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (Index k = 0; k < n; ++k) companion(0, k) = -c[static_cast<std::size_t>(n - 1 - k)] / c.back();
  for (Index k = 1; k < n; ++k) companion(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  std::vector<double> deriv(c.size() > 1 ? c.size() - 1 : 1, 0.0);
  for (std::size_t k = 1; k < c.size(); ++k) deriv[k - 1] = c[k] * static_cast<double>(k);
  for (Index k = 0; k < n; ++k) {
    const auto z = es.eigenvalues()[k];
    if (std::abs(z.imag()) > 1e-7 * (1.0 + std::abs(z))) continue;
    double x = z.real();
    for (int it = 0; it < 50; ++it) {
      const double d = horner(deriv, x);
      if (d == 0.0) break;
      const double step = horner(c, x) / d;
      x -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(x))) break;
    }
    if (x > lo && x < hi) roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// int_0^x |cos(theta)| d theta for x >= 0.
double abs_cos_integral(double x) {
  const double pi = std::numbers::pi;
  const double periods = std::floor(x / pi);
  const double rem = x - periods * pi;
  const double partial = rem <= pi / 2 ? std::sin(rem) : 2.0 - std::sin(rem);
  return 2.0 * periods + partial;
}

}  // namespace

double WeightFunction::operator()(double t) const {
  switch (kind_) {
    case Kind::constant:
      return params_[0];
    case Kind::cosine:
      return params_[0] * std::cos(2.0 * std::numbers::pi * t / params_[1]);
    case Kind::polynomial:
      return horner(params_, t);
    case Kind::tabulated: {
      if (t <= times_.front()) return params_.front();
      if (t >= times_.back()) return params_.back();
      const auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const auto k = static_cast<std::size_t>(std::distance(times_.begin(), it) - 1);
      const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
      return (1.0 - w) * params_[k] + w * params_[k + 1];
    }
  }
  return 0.0;
}

WeightNorms weight_norms(const WeightFunction& w) {
  const double T = w.horizon();
  const auto& p = w.params();
  switch (w.kind()) {
    case WeightFunction::Kind::constant:
      return {std::abs(p[0]) * T, p[0] * p[0] * T};
    case WeightFunction::Kind::cosine: {
      const double amp = p[0];
      const double omega = 2.0 * std::numbers::pi / p[1];
      return {std::abs(amp) * abs_cos_integral(omega * T) / omega,
              amp * amp * (T / 2.0 + std::sin(2.0 * omega * T) / (4.0 * omega))};
    }
    case WeightFunction::Kind::polynomial: {
      const auto prim = antiderivative(p);
      std::vector<double> cuts{0.0};
      for (double r : real_roots_in(p, 0.0, T)) cuts.push_back(r);
      cuts.push_back(T);
      double l1 = 0.0;
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        l1 += std::abs(horner(prim, cuts[k + 1]) - horner(prim, cuts[k]));
      std::vector<double> sq(2 * p.size() - 1, 0.0);
      for (std::size_t a = 0; a < p.size(); ++a)
        for (std::size_t b = 0; b < p.size(); ++b) sq[a + b] += p[a] * p[b];
      return {l1, horner(antiderivative(sq), T)};
    }
    case WeightFunction::Kind::tabulated: {
      const auto& t = w.times();
      double l1 = 0.0;
      double l2sq = 0.0;
      for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double h = t[k + 1] - t[k];
        const double a = p[k];
        const double b = p[k + 1];
        if (!std::isfinite(a) || !std::isfinite(b))
          throw DataError("weight_norms: tabulated weight has non-finite values");
        l2sq += h * (a * a + a * b + b * b) / 3.0;
        if (a * b >= 0.0)
          l1 += h * std::abs(a + b) / 2.0;
        else
          l1 += h * (a * a + b * b) / (2.0 * (std::abs(a) + std::abs(b)));
      }
      return {l1, l2sq};
    }
  }
  return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// GeneratorSpec

std::string to_string(GrowthClass g) {
  switch (g) {
    case GrowthClass::lipschitz:
      return "lipschitz";
    case GrowthClass::quadratic:
      return "quadratic";
    case GrowthClass::subquadratic_mixed:
      return "subquadratic-mixed";
    case GrowthClass::linear_growth:
      return "linear-growth";
  }
  return "unknown";
}

Eigen::VectorXd GeneratorSpec::baseline(double t) const {
  if (!eval) throw UsageError("GeneratorSpec: no driver attached");
  const Eigen::MatrixXd gy = Eigen::MatrixXd::Zero(1, m);
  const Eigen::MatrixXd gz = Eigen::MatrixXd::Zero(1, m * d);
  const Eigen::MatrixXd state = Eigen::MatrixXd::Zero(1, d);
  return eval(t, gy, gz, state).row(0).transpose();
}

}  // namespace tdbsde
