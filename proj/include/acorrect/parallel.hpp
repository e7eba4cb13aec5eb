#pragma once

#include <cstddef>
#include <functional>

namespace acorrect {

/// Worker count: ACORRECT_THREADS when set to a positive integer, else the hardware concurrency.
int thread_count();

/// Calls body(i) for every i in [0, n), spreading contiguous chunks over thread_count() workers.
/// Callers write results into per-index slots, so reductions stay in a fixed order.
/// The first exception thrown by any body is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace acorrect
