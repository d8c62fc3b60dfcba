#include "atmask/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace atmask {

namespace {
std::atomic<int> g_threads{0};  // 0 = hardware default
}

int thread_count() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
    }
    return n;
}

void set_thread_count(int n) { g_threads.store(std::max(0, n), std::memory_order_relaxed); }

}  // namespace atmask
