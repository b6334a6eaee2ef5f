#pragma once

#include <cstddef>
#include <functional>

namespace burstsr {

// Process-wide cap on worker threads. n <= 0 resets to the hardware count.
// Parallel sections only ever split independent per-frame work and reduce in
// a fixed order afterwards, so results do not depend on the thread count.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n). Exceptions from workers are rethrown.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace burstsr
