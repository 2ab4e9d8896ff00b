#pragma once

#include <cstddef>
#include <functional>

namespace invym {

// Worker count used by parallel_for; 1 (the default) runs inline.
void set_thread_count(int threads);
int thread_count();

// Calls body(i) for i in [0, n) across the configured workers. Bodies must
// write only to slot i of caller-owned storage; callers reduce serially so
// results do not depend on scheduling. Every index runs; the exception of the
// lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace invym
