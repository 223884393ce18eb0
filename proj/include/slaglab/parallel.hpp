#pragma once

#include <cstddef>
#include <functional>

namespace slaglab {

/// Worker count: set_thread_count() if called, else SLAGLAB_THREADS, else the
/// hardware concurrency.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Runs body(i) for i in [0, n) on contiguous chunks. body must only write
/// to slots owned by its index. Exceptions thrown by workers are rethrown
/// (the first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace slaglab
