#pragma once

#include <cstddef>
#include <functional>

namespace morsenorm {

/// Worker count from MORSENORM_THREADS, else the hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, count) on up to `workers` threads (0 selects
/// worker_count()). Indices are split into contiguous blocks, so results
/// written per index do not depend on the worker count. The first exception
/// thrown by fn is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, std::size_t workers = 0);

}  // namespace morsenorm
