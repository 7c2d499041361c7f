#pragma once

#include <cstddef>
#include <functional>

namespace tailx::detail {

/// Worker count: TAILX_THREADS if set, otherwise hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for every i in [0, count) across worker threads. Tasks are
/// claimed dynamically, so body must only write to slots owned by i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace tailx::detail
