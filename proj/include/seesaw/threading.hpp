#pragma once

#include <cstdint>
#include <functional>

namespace seesaw {

// Worker-thread cap: SEESAW_THREADS if set, else hardware parallelism.
int thread_count();

// Runs fn over [0, total) split into contiguous chunks, one per worker.
// Chunk boundaries depend only on (total, thread_count), and callers only
// write disjoint outputs, so results are independent of scheduling.
void parallel_for(std::int64_t total, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace seesaw
