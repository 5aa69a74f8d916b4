#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace advgraph {

// Runs fn(i) for i in [0, n). Work items must be independent; callers make
// results deterministic by deriving per-item seeds, so worker count never
// changes the output.
template <typename Fn>
void parallel_for(size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t nthreads = std::min(static_cast<size_t>(workers), n);
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (size_t t = 0; t < nthreads; ++t) {
        threads.emplace_back([&fn, t, n, nthreads]() {
            for (size_t i = t; i < n; i += nthreads) fn(i);
        });
    }
    for (auto& th : threads) th.join();
}

} // namespace advgraph
