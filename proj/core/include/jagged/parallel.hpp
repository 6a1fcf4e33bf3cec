#pragma once

#include <cstdint>
#include <functional>

namespace jagged {

/// Runs fn(begin, end) over contiguous chunks of [0, n) on up to `threads`
/// std::threads. Chunk boundaries never affect results as long as distinct
/// indices write distinct outputs, so output bits are independent of the
/// thread count.
void parallel_for(int64_t n, int threads, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace jagged
