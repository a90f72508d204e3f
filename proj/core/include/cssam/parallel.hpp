#pragma once

#include <cstddef>
#include <functional>

namespace cssam {

// Number of workers used when a caller passes threads <= 0.
int default_threads();

// Runs fn(i) for i in [0, n) on up to `threads` workers with contiguous
// static chunks. Callers write results into per-index slots, so the outcome
// does not depend on scheduling. The first exception thrown by any fn is
// rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace cssam
