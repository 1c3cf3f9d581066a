#pragma once

// Index-parallel loops whose results do not depend on the worker count.

#include <cstddef>
#include <functional>

namespace ehd {

/// Worker count: EHD_LAB_THREADS if set to a positive integer, else hardware concurrency.
int thread_count();

/// Calls body(i) for i in [0, n) on up to thread_count() workers. Each index is
/// visited exactly once; the first exception thrown (lowest index) is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace ehd
