#pragma once

#include <cstddef>
#include <functional>

namespace depcen {

/// Worker count used when a caller passes 0: the DEPCEN_THREADS environment
/// variable if set, otherwise std::thread::hardware_concurrency().
unsigned default_thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers.
///
/// Tasks are claimed dynamically, so callers must write results into
/// index-keyed slots; the first exception thrown by any task is rethrown
/// after all workers join.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace depcen
