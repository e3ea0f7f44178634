#pragma once

#include <cstddef>
#include <functional>

namespace nctori {

/// Worker count: NCTORI_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
unsigned thread_count();

/// Runs body(i) for i in [0, count) over thread_count() workers with a static
/// block split. body must only write to state owned by index i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace nctori
