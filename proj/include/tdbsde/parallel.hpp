#pragma once

#include <cstdint>
#include <functional>

namespace tdbsde {

// Worker count used by path-parallel loops. 0 selects hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(begin, end) over fixed-size chunks of [0, count). Chunk
// boundaries depend only on count and chunk, never on the thread count, so
// any per-chunk computation is bit-identical for every thread setting.
void parallel_for(std::int64_t count, std::int64_t chunk,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace tdbsde
