#pragma once

#include <cstddef>
#include <functional>

namespace sparsenorm {

// Worker cap from SPARSENORM_THREADS (unset or invalid: hardware concurrency).
std::size_t worker_count();

// Runs body(i) for i in [0, n) over at most worker_count() threads using
// static contiguous chunks. Bodies must only write to slots owned by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sparsenorm
