#pragma once

#include <cstddef>
#include <functional>

namespace parseq {

// Worker count for parallel_for: hardware concurrency, capped by the
// PARSEQ_THREADS environment variable (read once).
std::size_t thread_count();

// Runs fn(i) for every i in [begin, end), splitting the range into chunks
// executed on a shared worker pool. Callers must ensure distinct indices
// touch disjoint data. Runs inline when the range is shorter than `grain`,
// when a single worker is configured, or when invoked from inside another
// parallel_for (no nested parallelism).
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn,
                  std::size_t grain = 1);

}  // namespace parseq
