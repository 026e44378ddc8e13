#pragma once

#include <cstddef>
#include <functional>

namespace autodetect {

/// Process-wide worker count used by the data-parallel loops. 0 selects the
/// number of logical cores.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(i) for every i in [0, n) over contiguous static blocks. Callers
/// write results into per-index slots and reduce afterwards in index order,
/// which keeps numerical results independent of the worker count. The first
/// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace autodetect
