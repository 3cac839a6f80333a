#pragma once

#include <cstddef>
#include <functional>

namespace mapgsa {

/// Number of worker threads used by parallel loops (default: hardware concurrency).
std::size_t num_threads();
void set_num_threads(std::size_t n);

/// Runs body(k) for k in [0, n). Each k must write only to its own output
/// slot; results are then independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mapgsa
