// parallel.hpp
// Static-partition parallel loop. Callers must only use it for iterations
// that write disjoint outputs and perform no cross-iteration reductions, so
// results are bitwise identical for any thread count or schedule.

#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace atmask {

/// Current worker-thread setting (>= 1).
int thread_count();

/// Set the worker-thread count; 0 restores the hardware default.
void set_thread_count(int n);

template <class Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
    const int threads = thread_count();
    if (threads <= 1 || n < 2 * threads) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = n * t / threads;
        const std::int64_t hi = n * (t + 1) / threads;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace atmask
