#pragma once

#include <cstddef>
#include <functional>

namespace opdiff {

/// Worker count from OPDIFF_THREADS, defaulting to the hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, count). Iterations must be independent; results
/// do not depend on the schedule.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace opdiff
