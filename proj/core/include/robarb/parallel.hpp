#pragma once

#include <cstddef>
#include <functional>

namespace robarb {

// Runs body(i) for i in [0, count) on `threads` workers using contiguous
// static chunks. Each index is handled exactly once; callers must write
// results into per-index slots so output never depends on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// Same, but hands each worker a [begin, end) range.
void parallel_for_ranges(std::size_t count, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body);

int hardware_threads();

} // namespace robarb
