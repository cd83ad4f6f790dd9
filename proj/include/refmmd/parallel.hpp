#pragma once

#include <cstddef>
#include <functional>

namespace refmmd {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Indices are handed out dynamically; callers write results
/// into per-index slots so the outcome never depends on scheduling.
/// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested) noexcept;

}  // namespace refmmd
