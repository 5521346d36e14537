#pragma once

#include <cstddef>
#include <functional>

namespace otc {

/// Worker count: OTC_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(0) .. fn(n-1) over contiguous index blocks, one block per worker.
/// Each index must write only to its own output slot. If any call throws,
/// the exception from the lowest failing index is rethrown after all
/// workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace otc
