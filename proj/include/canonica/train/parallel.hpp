#pragma once

#include <cstddef>
#include <functional>

namespace canonica::train {

// Worker count: CANONICA_THREADS if set (>= 1), else hardware concurrency.
int worker_count();

// Runs body(k) for k in [0, n) on up to worker_count() threads. Each index
// runs exactly once; callers write results into per-index slots so the
// reduction order does not depend on scheduling. The first exception thrown
// by any body is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace canonica::train
