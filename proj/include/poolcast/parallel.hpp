#pragma once

#include <cstddef>
#include <functional>

namespace poolcast {

/// Runs task(0..count-1) on up to `jobs` threads. Each index runs exactly
/// once; callers write results into index-addressed slots, so output never
/// depends on scheduling. The exception of the lowest failing index is
/// rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace poolcast
