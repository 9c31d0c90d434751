#pragma once

#include <cstddef>
#include <functional>

namespace sf {

// Runs fn(i) for i in [0, count) on a worker pool. Callers that reduce results
// must write into per-index slots and combine them in index order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)> &fn);

unsigned worker_count();

} // namespace sf
