#pragma once

#include <cstdint>
#include <functional>

namespace sfpc {

/// Worker count: SFPC_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index
/// runs exactly once; results must be written to per-index slots. The first
/// exception thrown by any body is rethrown after all workers finish.
void parallel_for(int n, const std::function<void(int)>& body);

/// Seed for replicate `index` derived from a master seed (splitmix64 of
/// master + (index + 1) * golden gamma).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

}  // namespace sfpc
