#pragma once

#include <cstddef>
#include <functional>

namespace fundus {

// FUNDUS_SCREEN_THREADS caps worker threads; unset or 0 means hardware concurrency.
std::size_t worker_threads();

// Runs fn(i) for i in [0, n). Each index must write only its own output slot;
// callers reduce in index order so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fundus
