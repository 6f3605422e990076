// Minimal worker-pool-free parallel loop. Parallel sections only ever write
// to disjoint output slots; all floating-point reductions happen serially in
// index order afterwards, so results are identical for any worker count.
#pragma once

#include <cstddef>
#include <functional>

namespace swflow {

// Worker cap for parallel loops; 1 disables threading. Set from --threads or
// the SWFLOW_THREADS environment variable.
void set_thread_count(int n);
int thread_count();

// Runs fn(0..n-1). Stays serial when n < min_parallel (cheap per-item work
// does not justify worker spawn).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t min_parallel = 1024);

}  // namespace swflow
