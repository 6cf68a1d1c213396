#pragma once

#include <functional>

namespace oed {

/// Worker cap for parallel loops. Zero means "not set": the OED_THREADS
/// environment variable is consulted, then the hardware concurrency.
void set_thread_count(int threads);
int thread_count();

/// Runs fn(i) for i in [0, n). Each index must write only its own output
/// slot, so results do not depend on the number of workers. The first
/// exception thrown by any index is rethrown after all workers finish.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace oed
