#pragma once

#include <cstddef>
#include <functional>

namespace bh3d {

/// Caps worker threads for all subsequent parallel loops (0 = library default).
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [begin, end) across worker threads. Iterations must
/// write disjoint outputs.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

}  // namespace bh3d
