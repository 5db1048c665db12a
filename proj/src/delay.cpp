#include "tdbsde/delay.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

namespace tdbsde {

double DelayStencil::in_grid_mass(int i) const {
  double s = 0.0;
  for (const auto& e : nodes.at(static_cast<std::size_t>(i)))
    if (e.source != kZeroSource) s += e.coefficient;
  return s;
}

double DelayStencil::zero_mass(int i) const {
  double s = 0.0;
  for (const auto& e : nodes.at(static_cast<std::size_t>(i)))
    if (e.source == kZeroSource) s += e.coefficient;
  return s;
}

DelayStencil build_stencil(const TimeGrid& grid, const DelayMeasure& measure,
                           const WeightFunction& weight) {
  const double T = grid.horizon();
  if (measure.horizon() != T || weight.horizon() != T)
    throw UsageError("build_stencil: measure, weight and grid horizons differ");
  const int n = grid.steps();
  const double dt = grid.dt();
  const double snap_tol = 1e-9 * dt;

  DelayStencil out{grid, {}};
  out.nodes.resize(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    const double t = grid.node(i);
    std::map<int, double> acc;
    for (const auto& atom : measure.atoms()) {
      if (atom.mass == 0.0) continue;
      const double source_time = t + atom.location;
      if (source_time < -snap_tol) {
        acc[kZeroSource] += atom.mass;
        continue;
      }
      const int j = std::min(i, grid.floor_index(source_time));
      acc[j] += atom.mass * weight(grid.node(j));
    }
    if (!measure.density().empty()) {
      // Sources t_j, j < i, own r in [t_j - t_i, t_{j+1} - t_i).
      for (int j = 0; j < i; ++j) {
        const double lo = grid.node(j) - t;
        const double hi = grid.node(j + 1) - t;
        const double mass = measure.density_mass(lo, hi);
        if (mass != 0.0) acc[j] += mass * weight(grid.node(j));
      }
      const double before_start = measure.density_mass(-T, -t);
      if (before_start != 0.0) acc[kZeroSource] += before_start;
    }
    auto& list = out.nodes[static_cast<std::size_t>(i)];
    list.reserve(acc.size());
    for (const auto& [source, c] : acc) list.push_back({source, c});
  }
  return out;
}

void write_stencil_csv(std::ostream& os, const DelayStencil& stencil) {
  const auto old = os.precision(17);
  os << "node,source,coefficient\n";
  for (std::size_t i = 0; i < stencil.nodes.size(); ++i)
    for (const auto& e : stencil.nodes[i]) os << i << ',' << e.source << ',' << e.coefficient << '\n';
  os.precision(old);
}

}  // namespace tdbsde
