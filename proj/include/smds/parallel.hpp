#pragma once

#include <cstddef>
#include <functional>

namespace smds {

// Number of workers used by parallel_for. Defaults to 1.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

// Runs fn(i) for i in [0, count). Tasks must write disjoint data; the
// first exception thrown by any task is rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace smds
