#pragma once

#include <cstdint>
#include <functional>

namespace clit {

// Global worker count used by the compute kernels. 1 (the default) runs
// everything inline on the caller. Partitioning is a pure function of
// (range size, thread count), so repeated runs with the same configuration
// are bit-identical.
void set_num_threads(int n);
int num_threads();

// Splits [0, n) into contiguous chunks and runs fn(begin, end) on the pool.
// Blocks until all chunks complete. fn must not touch overlapping output.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace clit
