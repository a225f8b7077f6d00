#pragma once

#include <cstddef>
#include <functional>

namespace iqa {

// Worker cap: IQA_THREADS when set to a positive integer, otherwise the
// hardware concurrency.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Tasks must write to disjoint outputs; the
// first exception (lowest index) is rethrown after all workers join.
// Nested calls run serially on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace iqa
