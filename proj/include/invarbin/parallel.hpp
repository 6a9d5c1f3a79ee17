#pragma once

#include <cstddef>
#include <functional>

namespace invarbin {

/// Worker count from INVARBIN_THREADS, else the hardware concurrency.
int default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0: default).
/// Indices are claimed dynamically; the first exception thrown is rethrown
/// after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace invarbin
