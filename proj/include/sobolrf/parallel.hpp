#pragma once

#include <cstddef>
#include <functional>

namespace sobolrf {

// Worker count used by parallel_for. Defaults to SOBOLRF_THREADS when set,
// otherwise std::thread::hardware_concurrency(). Results never depend on it.
std::size_t thread_count();
void set_thread_count(std::size_t threads);

// Runs body(i) for every i in [0, count). Indices are handed out dynamically;
// callers write to index-owned slots so the outcome is schedule-independent.
// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sobolrf
