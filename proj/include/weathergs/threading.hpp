#pragma once

#include <cstddef>
#include <functional>

namespace wgs {

/// Number of worker threads used by parallel_for. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs fn(begin, end) over [0, n) split into fixed-size chunks. The chunk
/// decomposition depends only on n, never on the thread count, and every
/// chunk writes to disjoint state, so results are identical for any
/// --threads setting. fn must not throw.
void parallel_for(size_t n, size_t chunk, const std::function<void(size_t, size_t)>& fn);

}  // namespace wgs
