#pragma once

#include <cstddef>
#include <functional>

namespace pmsdr {

// Resolve the worker count for a stage: explicit request > PMSDR_THREADS
// environment variable > hardware concurrency. Always at least 1.
int resolve_threads(int requested);

// Run fn(begin, end) over a fixed block partition of [0, n) on `threads`
// workers. The partition depends only on (n, threads), so callers that write
// results into preallocated per-index slots are deterministic regardless of
// scheduling. Exceptions from workers are rethrown on the calling thread
// (the first one, by block order).
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace pmsdr
