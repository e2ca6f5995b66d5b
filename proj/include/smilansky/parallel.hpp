#pragma once

#include <cstddef>
#include <functional>

namespace smilansky {

// Worker count: hardware concurrency capped by SMILANSKY_THREADS when set.
unsigned worker_count();

// Runs f(i) for i in [0, n). Each index is handled by exactly one worker, so
// results written to per-index slots are independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace smilansky
