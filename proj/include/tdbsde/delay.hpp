#pragma once

#include <iosfwd>
#include <vector>

#include "tdbsde/core.hpp"

namespace tdbsde {

inline constexpr int kZeroSource = -1;

struct StencilEntry {
  int source;  // grid index, or kZeroSource for mass falling before time 0
  double coefficient;
};

/// Discretised delay operator: at node t_i, gamma(t_i) = sum_k c_k * value(source_k).
/// Entries pointing at kZeroSource keep their mass for accounting but read the
/// zero extension.
struct DelayStencil {
  TimeGrid grid;
  std::vector<std::vector<StencilEntry>> nodes;  // N+1 lists

  double in_grid_mass(int i) const;
  double zero_mass(int i) const;
};

/// Atoms snap to the grid node at or below t_i + r; density cells [t_j, t_{j+1})
/// carry their mass with the weight taken at the left endpoint t_j. Sources
/// before time 0 map to kZeroSource.
DelayStencil build_stencil(const TimeGrid& grid, const DelayMeasure& measure,
                           const WeightFunction& weight);

enum class Leg { Y, Z };

/// gamma(t_i) for every path: M x m for the Y leg, M x (m d) for the Z leg.
/// Z has no value at the terminal node, so such sources read zero.
template <class Scalar>
MatrixX<Scalar> apply_stencil(const DelayStencil& stencil, const PathEnsemble<Scalar>& ensemble,
                              Leg leg, int i) {
  if (!(stencil.grid == ensemble.grid()))
    throw UsageError("apply_stencil: stencil and ensemble grids differ");
  if (i < 0 || i > stencil.grid.steps()) throw UsageError("apply_stencil: node index out of range");
  const auto& slices = leg == Leg::Y ? ensemble.Y : ensemble.Z;
  const Index cols = leg == Leg::Y ? ensemble.m : ensemble.m * ensemble.noise_dim();
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(ensemble.path_count(), cols);
  for (const auto& e : stencil.nodes[static_cast<std::size_t>(i)]) {
    if (e.source == kZeroSource) continue;
    if (static_cast<std::size_t>(e.source) >= slices.size()) continue;
    out.noalias() += static_cast<Scalar>(e.coefficient) * slices[static_cast<std::size_t>(e.source)];
  }
  return out;
}

/// CSV with header node,source,coefficient; the zero source is written as -1.
void write_stencil_csv(std::ostream& os, const DelayStencil& stencil);

}  // namespace tdbsde
