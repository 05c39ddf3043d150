// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace asrz {

// Worker count: ASR_NUM_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
size_t worker_threads();

// Runs fn(i) for i in [0, n) on up to worker_threads() threads. Each index is
// processed exactly once; callers write results to per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace asrz
