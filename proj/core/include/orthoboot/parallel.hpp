#pragma once

#include <cstddef>
#include <functional>

namespace orthoboot {

/// Resolves a requested thread count; 0 means hardware concurrency.
std::size_t resolve_threads(std::size_t requested) noexcept;

/// Calls body(i) for i in [0, count) on up to `threads` worker threads.
/// Work is claimed dynamically, so callers must write results by index. If any
/// call throws, the exception from the lowest failing index is rethrown after
/// all workers finish.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace orthoboot
