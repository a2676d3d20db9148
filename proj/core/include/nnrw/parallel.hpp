#pragma once

#include <cstddef>
#include <functional>

namespace nnrw {

/// Worker count: hardware concurrency, capped by the NNRW_THREADS environment variable.
unsigned worker_count();

/// Runs fn(i) for i in [0, n). Iterations are independent; each index is visited
/// exactly once. Exceptions from any iteration are rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nnrw
