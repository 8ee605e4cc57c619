#pragma once

#include <cstddef>
#include <functional>

namespace corpus_mixer {

// Worker count: CORPUS_MIXER_THREADS when set to a positive integer,
// otherwise the hardware concurrency (at least 1).
std::size_t thread_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunks are disjoint,
// so callers that write results by index get the same output for any thread
// count. Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace corpus_mixer
