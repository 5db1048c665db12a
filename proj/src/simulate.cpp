#include "tdbsde/simulate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tdbsde/parallel.hpp"

namespace tdbsde {

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) noexcept {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t pair_index) noexcept {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(pair_index),
                                static_cast<std::uint32_t>(pair_index >> 32),
                                static_cast<std::uint32_t>(stream),
                                static_cast<std::uint32_t>(stream >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                            static_cast<std::uint32_t>(seed >> 32)};
  const auto out = Philox4x32::block(ctr, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  const std::uint64_t b = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = static_cast<double>((a >> 11) + 1) * kScale;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * kScale;        // [0, 1)
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

std::size_t brownian_storage_bytes(const TimeGrid& grid, int d, Index paths) {
  const long double bytes = static_cast<long double>(paths) *
                            static_cast<long double>(grid.steps() + 1) *
                            static_cast<long double>(d) * sizeof(double);
  if (bytes > static_cast<long double>(std::numeric_limits<std::size_t>::max()))
    return std::numeric_limits<std::size_t>::max();
  return static_cast<std::size_t>(bytes);
}

std::shared_ptr<const Paths> simulate_brownian(const TimeGrid& grid, int d, Index paths,
                                               RngSpec rng, std::size_t budget_bytes) {
  if (paths < 1) throw UsageError("simulate_brownian: need at least one path");
  if (d < 1) throw UsageError("simulate_brownian: noise dimension must be >= 1");
  const std::size_t need = brownian_storage_bytes(grid, d, paths);
  if (need > budget_bytes) {
    std::ostringstream msg;
    msg << "simulate_brownian: " << paths << " paths x " << grid.steps() + 1 << " nodes x " << d
        << " components needs " << need << " bytes, budget is " << budget_bytes;
    throw ResourceError(msg.str(), need);
  }

  auto out = std::make_shared<Paths>(Paths{grid, paths, d, rng, {}});
  const int n = grid.steps();
  out->W.assign(static_cast<std::size_t>(n + 1), Eigen::MatrixXd::Zero(paths, d));
  const double sd = std::sqrt(grid.dt());
  const std::uint64_t per_path = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(d);

  parallel_for(paths, 2048, [&](std::int64_t begin, std::int64_t end) {
    Eigen::VectorXd draws(static_cast<Index>(per_path));
    for (std::int64_t p = begin; p < end; ++p) {
      const std::uint64_t stream = rng.stream_offset + static_cast<std::uint64_t>(p);
      for (std::uint64_t k = 0; k < per_path; k += 2) {
        const auto z = normal_pair(rng.seed, stream, k / 2);
        draws[static_cast<Index>(k)] = z[0];
        if (k + 1 < per_path) draws[static_cast<Index>(k + 1)] = z[1];
      }
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c)
          out->W[static_cast<std::size_t>(i + 1)](p, c) =
              out->W[static_cast<std::size_t>(i)](p, c) +
              sd * draws[static_cast<Index>(i) * d + c];
    }
  });
  return out;
}

std::shared_ptr<const Paths> coarsen(const Paths& fine, int factor) {
  if (factor < 1 || fine.grid.steps() % factor != 0)
    throw UsageError("coarsen: factor must divide the number of steps");
  TimeGrid coarse(fine.grid.horizon(), fine.grid.steps() / factor);
  auto out = std::make_shared<Paths>(Paths{coarse, fine.path_count, fine.dim, fine.rng, {}});
  out->W.reserve(static_cast<std::size_t>(coarse.steps() + 1));
  for (int i = 0; i <= coarse.steps(); ++i)
    out->W.push_back(fine.W[static_cast<std::size_t>(i * factor)]);
  return out;
}

Ensemble simulate_ensemble(const TimeGrid& grid, int d, int m, Index paths, RngSpec rng) {
  return Ensemble(simulate_brownian(grid, d, paths, rng), m);
}

}  // namespace tdbsde
