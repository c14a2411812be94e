#pragma once

#include <cstddef>
#include <functional>

namespace thermoquant {

/// Upper bound on worker threads used by grid loops (default 1).
void set_threads(unsigned n);
unsigned threads();

/// Calls fn(i) for i in [begin, end), split into contiguous chunks. Each index
/// is handled by exactly one worker, so results written per index are
/// independent of the thread count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace thermoquant
