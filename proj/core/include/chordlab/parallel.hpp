#pragma once

#include <cstdint>
#include <functional>

namespace chordlab {

// Runs fn(begin, end) over a fixed partition of [0, n). The partition depends
// only on n and the worker count, never on data values, so results that write
// disjoint output ranges are bitwise identical for any pool size (including 1).
// Small ranges run inline on the calling thread.
void parallel_for(std::int64_t n, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

// Worker count of the shared pool (>= 1).
int parallel_workers();

}  // namespace chordlab
