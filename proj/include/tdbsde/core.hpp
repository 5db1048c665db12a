#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tdbsde/errors.hpp"

namespace tdbsde {

using Index = Eigen::Index;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Time grid

/// Uniform grid t_i = i T / N on a finite horizon.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }
  double node(int i) const noexcept {
    return i == steps_ ? horizon_ : static_cast<double>(i) * dt_;
  }
  std::vector<double> nodes() const;

  // Largest node index with t_i <= t (tolerant to rounding at nodes).
  // Negative times return -1.
  int floor_index(double t) const noexcept;

  bool operator==(const TimeGrid& other) const noexcept {
    return horizon_ == other.horizon_ && steps_ == other.steps_;
  }

 private:
  double horizon_;
  int steps_;
  double dt_;
};

// ---------------------------------------------------------------------------
// Delay measures

struct Atom {
  double location;
  double mass;
};

/// Piecewise-constant density: levels[k] on [breakpoints[k], breakpoints[k+1]).
struct PiecewiseDensity {
  std::vector<double> breakpoints;
  std::vector<double> levels;

  bool empty() const noexcept { return levels.empty(); }
};

/// Raw measure description, as read from configs. Not validated; see
/// `DelayMeasure` for the checked form.
struct MeasureSpec {
  std::vector<Atom> atoms;
  PiecewiseDensity density;
};

// Returns a description of the first way `spec` fails to be a finite
// nonnegative measure supported on [-horizon, 0], or nullopt.
std::optional<std::string> measure_defect(double horizon, const MeasureSpec& spec);

/// Finite nonnegative measure on [-T, 0]: Dirac atoms plus a piecewise-constant
/// density. Immutable after construction.
class DelayMeasure {
 public:
  DelayMeasure(double horizon, MeasureSpec spec);

  static DelayMeasure dirac(double horizon, double location, double mass = 1.0);
  static DelayMeasure uniform(double horizon, double level = 1.0);
  static DelayMeasure zero(double horizon);

  double horizon() const noexcept { return horizon_; }
  const std::vector<Atom>& atoms() const noexcept { return spec_.atoms; }
  const PiecewiseDensity& density() const noexcept { return spec_.density; }
  const MeasureSpec& spec() const noexcept { return spec_; }

  double total_mass() const;
  // alpha([a, b]), closed on both ends for atoms.
  double mass(double a, double b) const;
  // Integral of the density alone over [a, b].
  double density_mass(double a, double b) const;
  // s -> alpha([s - T, 0]).
  double tail_mass(double s) const { return mass(s - horizon_, 0.0); }

  DelayMeasure scaled(double factor) const;

 private:
  double horizon_;
  MeasureSpec spec_;
  std::vector<double> cumulative_;  // density integral up to each breakpoint
};

enum class MeasureOrder { equal, less_equal, greater_equal, unordered };

// Setwise comparison alpha <= beta on atoms-plus-density representations.
// Atoms are compared on the union of locations and densities on the union of
// breakpoints, which is exact for this representation.
MeasureOrder compare_measures(const DelayMeasure& alpha, const DelayMeasure& beta);

// ---------------------------------------------------------------------------
// Weighting functions

class WeightFunction {
 public:
  enum class Kind { constant, cosine, polynomial, tabulated };

  static WeightFunction constant(double horizon, double value);
  // t -> amplitude * cos(2 pi t / period)
  static WeightFunction cosine(double horizon, double amplitude, double period);
  // t -> c0 + c1 t + c2 t^2 + ...
  static WeightFunction polynomial(double horizon, std::vector<double> coeffs);
  // Piecewise-linear through (times[k], values[k]); times must span [0, T].
  static WeightFunction tabulated(double horizon, std::vector<double> times,
                                  std::vector<double> values);

  double operator()(double t) const;

  Kind kind() const noexcept { return kind_; }
  double horizon() const noexcept { return horizon_; }
  const std::vector<double>& params() const noexcept { return params_; }
  const std::vector<double>& times() const noexcept { return times_; }

 private:
  WeightFunction(Kind kind, double horizon, std::vector<double> params,
                 std::vector<double> times = {});

  Kind kind_;
  double horizon_;
  std::vector<double> params_;
  std::vector<double> times_;
};

struct WeightNorms {
  double l1;    // int_0^T |w|
  double l2sq;  // int_0^T |w|^2
};

WeightNorms weight_norms(const WeightFunction& w);

// ---------------------------------------------------------------------------
// Generators

enum class GrowthClass { lipschitz, quadratic, subquadratic_mixed, linear_growth };

std::string to_string(GrowthClass g);

/// Vectorised driver: rows are paths. gy is M x m, gz is M x (m d) with the
/// m x d block of each path flattened row-major, state is the M x d Brownian
/// slice at t. Returns M x m.
using DriverFn = std::function<Eigen::MatrixXd(
    double t, const Eigen::MatrixXd& gy, const Eigen::MatrixXd& gz,
    const Eigen::MatrixXd& state)>;

struct GeneratorSpec {
  std::string name;
  int m = 1;
  int d = 1;
  double lipschitz_k = 0.0;
  GrowthClass growth = GrowthClass::lipschitz;
  DriverFn eval;

  // g(t, 0, 0) as an m-vector.
  Eigen::VectorXd baseline(double t) const;
};

// ---------------------------------------------------------------------------
// Path ensembles

struct RngSpec {
  std::uint64_t seed = 0;
  // Path j draws from stream stream_offset + j.
  std::uint64_t stream_offset = 0;
};

/// M Brownian paths on a grid: W[i] is the M x d slice at t_i.
template <class Scalar>
struct BrownianPaths {
  TimeGrid grid;
  Index path_count = 0;
  int dim = 1;
  RngSpec rng;
  std::vector<MatrixX<Scalar>> W;

  MatrixX<Scalar> increment(int i) const { return W[i + 1] - W[i]; }
};

/// (W, Y, Z[, X]) on a grid. Y has N+1 slices (M x m); Z has N slices
/// (M x m d), constant on [t_i, t_{i+1}); X, when present, has N+1 slices.
/// Brownian paths are shared so Picard iterates reuse the same draws.
template <class Scalar>
struct PathEnsemble {
  using Matrix = MatrixX<Scalar>;

  std::shared_ptr<const BrownianPaths<Scalar>> paths;
  int m = 1;
  std::vector<Matrix> Y;
  std::vector<Matrix> Z;
  std::vector<Matrix> X;

  PathEnsemble() = default;
  PathEnsemble(std::shared_ptr<const BrownianPaths<Scalar>> p, int value_dim)
      : paths(std::move(p)), m(value_dim) {
    if (!paths) throw UsageError("PathEnsemble: null Brownian paths");
    if (m < 1) throw UsageError("PathEnsemble: value dimension must be >= 1");
    const int n = paths->grid.steps();
    const Index rows = paths->path_count;
    Y.assign(static_cast<std::size_t>(n + 1), Matrix::Zero(rows, m));
    Z.assign(static_cast<std::size_t>(n), Matrix::Zero(rows, m * paths->dim));
  }

  const TimeGrid& grid() const { return paths->grid; }
  Index path_count() const { return paths ? paths->path_count : 0; }
  int noise_dim() const { return paths->dim; }
  bool has_forward() const { return !X.empty(); }

  // Zero extension for t < 0; otherwise the slice at the floor node.
  Matrix Y_at(double t) const {
    const int i = grid().floor_index(t);
    if (i < 0) return Matrix::Zero(path_count(), m);
    return Y[static_cast<std::size_t>(i)];
  }
  // Zero for t < 0 and at/after T (Z lives on N intervals).
  Matrix Z_at(double t) const {
    const int i = grid().floor_index(t);
    if (i < 0 || i >= grid().steps()) return Matrix::Zero(path_count(), m * noise_dim());
    return Z[static_cast<std::size_t>(i)];
  }
};

using Paths = BrownianPaths<double>;
using Ensemble = PathEnsemble<double>;

// ---------------------------------------------------------------------------
// Empirical norms

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Per-path max_i |slice_i(p)|^2 (Euclidean over columns).
template <class Scalar>
VectorX<Scalar> sup_sq_per_path(const std::vector<MatrixX<Scalar>>& slices) {
  if (slices.empty()) return {};
  VectorX<Scalar> out = slices.front().rowwise().squaredNorm();
  for (std::size_t i = 1; i < slices.size(); ++i)
    out = out.cwiseMax(slices[i].rowwise().squaredNorm());
  return out;
}

// Per-path sum_i |slice_i(p)|^2 dt.
template <class Scalar>
VectorX<Scalar> quad_var_per_path(const std::vector<MatrixX<Scalar>>& slices, Scalar dt) {
  if (slices.empty()) return {};
  VectorX<Scalar> out = VectorX<Scalar>::Zero(slices.front().rows());
  for (const auto& s : slices) out += s.rowwise().squaredNorm();
  return out * dt;
}

template <class Scalar>
std::vector<MatrixX<Scalar>> slice_difference(const std::vector<MatrixX<Scalar>>& a,
                                              const std::vector<MatrixX<Scalar>>& b) {
  if (a.size() != b.size()) throw UsageError("slice_difference: slice counts differ");
  std::vector<MatrixX<Scalar>> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols())
      throw UsageError("slice_difference: slice shapes differ");
    out.push_back(a[i] - b[i]);
  }
  return out;
}

template <class Scalar>
Estimate mean_estimate(const VectorX<Scalar>& v) {
  const Index n = v.size();
  if (n == 0) throw UsageError("mean_estimate: empty sample");
  const double mean = static_cast<double>(v.mean());
  if (n == 1) return {mean, 0.0};
  const double var =
      static_cast<double>((v.array() - static_cast<Scalar>(mean)).square().sum()) /
      static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

namespace detail {
template <class Scalar>
void require_nonempty(const PathEnsemble<Scalar>& e, const char* who) {
  if (!e.paths || e.path_count() < 1 || e.Y.empty())
    throw UsageError(std::string(who) + ": empty ensemble");
}
template <class Scalar>
void require_compatible(const PathEnsemble<Scalar>& a, const PathEnsemble<Scalar>& b,
                        const char* who) {
  require_nonempty(a, who);
  require_nonempty(b, who);
  if (a.path_count() != b.path_count() || !(a.grid() == b.grid()) || a.m != b.m ||
      a.noise_dim() != b.noise_dim())
    throw UsageError(std::string(who) + ": ensembles have different shapes");
}
}  // namespace detail

/// (1/M) sum_p max_i |Y_{t_i}|^2 with its standard error.
template <class Scalar>
Estimate s2_estimate(const PathEnsemble<Scalar>& e) {
  detail::require_nonempty(e, "empirical_s2_norm");
  return mean_estimate<Scalar>(sup_sq_per_path<Scalar>(e.Y));
}

/// Same statistic for Y - Ybar.
template <class Scalar>
Estimate s2_estimate(const PathEnsemble<Scalar>& a, const PathEnsemble<Scalar>& b) {
  detail::require_compatible(a, b, "empirical_s2_norm");
  return mean_estimate<Scalar>(sup_sq_per_path<Scalar>(slice_difference<Scalar>(a.Y, b.Y)));
}

/// (1/M) sum_p sum_i |Z_{t_i}|^2 dt with its standard error.
template <class Scalar>
Estimate h2_estimate(const PathEnsemble<Scalar>& e) {
  detail::require_nonempty(e, "empirical_h2_norm");
  return mean_estimate<Scalar>(
      quad_var_per_path<Scalar>(e.Z, static_cast<Scalar>(e.grid().dt())));
}

template <class Scalar>
Estimate h2_estimate(const PathEnsemble<Scalar>& a, const PathEnsemble<Scalar>& b) {
  detail::require_compatible(a, b, "empirical_h2_norm");
  return mean_estimate<Scalar>(quad_var_per_path<Scalar>(
      slice_difference<Scalar>(a.Z, b.Z), static_cast<Scalar>(a.grid().dt())));
}

template <class Scalar>
double empirical_s2_norm(const PathEnsemble<Scalar>& e) { return s2_estimate(e).value; }
template <class Scalar>
double empirical_s2_norm(const PathEnsemble<Scalar>& a, const PathEnsemble<Scalar>& b) {
  return s2_estimate(a, b).value;
}
template <class Scalar>
double empirical_h2_norm(const PathEnsemble<Scalar>& e) { return h2_estimate(e).value; }
template <class Scalar>
double empirical_h2_norm(const PathEnsemble<Scalar>& a, const PathEnsemble<Scalar>& b) {
  return h2_estimate(a, b).value;
}

}  // namespace tdbsde
