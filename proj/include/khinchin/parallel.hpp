#pragma once

#include <cstddef>
#include <functional>

namespace khinchin {

/// Upper bound on threads used by parallel_for. Defaults to 1; 0 is treated
/// as 1.
void set_worker_threads(unsigned n);
unsigned worker_threads();

/// Calls body(i) for every i in [0, count). Callers write results into
/// index-addressed slots, so output order never depends on scheduling. If any
/// call throws, the exception from the lowest index is rethrown after all
/// workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace khinchin
