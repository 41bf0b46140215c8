#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace cmj {

// Runs fn(0..n-1) on `threads` workers (0 = hardware concurrency). The first
// exception by index is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

// Results come back in index order, whatever the scheduling.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned threads, F&& fn) {
    std::vector<T> out(n);
    parallel_for(n, threads, [&](std::size_t i) { out[i] = fn(i); });
    return out;
}

unsigned resolve_threads(unsigned requested);

}  // namespace cmj
