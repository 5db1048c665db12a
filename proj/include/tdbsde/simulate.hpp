#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>

#include "tdbsde/core.hpp"

namespace tdbsde {

/// Philox4x32-10 (Salmon et al., SC'11). Pure function of (counter, key):
/// the same inputs give the same block on every platform.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept;
};

/// Standard normal pair number `pair_index` of stream `stream` under `seed`.
std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t pair_index) noexcept;

inline constexpr std::size_t kDefaultStorageBudget = std::size_t{3} << 30;

/// Bytes needed to hold the W slices of an M-path, d-dimensional ensemble.
std::size_t brownian_storage_bytes(const TimeGrid& grid, int d, Index paths);

/// W_0 = 0 and i.i.d. N(0, dt I_d) increments; path j uses stream
/// rng.stream_offset + j, so its draws do not depend on the other paths.
std::shared_ptr<const Paths> simulate_brownian(const TimeGrid& grid, int d, Index paths,
                                               RngSpec rng,
                                               std::size_t budget_bytes = kDefaultStorageBudget);

/// Same paths observed on every `factor`-th node (common random numbers
/// across time resolutions).
std::shared_ptr<const Paths> coarsen(const Paths& fine, int factor);

/// Fresh ensemble (Y, Z zero) on the given paths.
Ensemble simulate_ensemble(const TimeGrid& grid, int d, int m, Index paths, RngSpec rng);

}  // namespace tdbsde
