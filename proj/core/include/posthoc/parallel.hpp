#pragma once

#include <cstddef>
#include <functional>

namespace posthoc {

/// Worker count used by parallel_for: POSTHOC_THREADS if set, else the
/// hardware concurrency.
unsigned thread_count();

/// Runs fn(i) for i in [0, n) on up to thread_count() workers. Each index is
/// processed exactly once; exceptions are captured and rethrown on the
/// caller thread. Callers must keep per-index outputs disjoint.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace posthoc
