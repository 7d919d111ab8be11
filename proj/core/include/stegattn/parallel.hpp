#pragma once

#include <functional>

namespace stegattn {

/// Thread cap for internal data-parallel loops. Reads STEGATTN_THREADS once;
/// defaults to the hardware concurrency. Results are identical regardless of
/// the cap: work items write disjoint outputs and each item's reduction order
/// is fixed.
int worker_threads();

/// Runs fn(i) for i in [0, count). Items must be independent.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace stegattn
