#pragma once

#include <functional>

namespace rbl {

/// Worker count: `requested` if positive, else RBL_THREADS if set, else the
/// hardware concurrency.
int resolve_thread_count(int requested = 0);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

} // namespace rbl
