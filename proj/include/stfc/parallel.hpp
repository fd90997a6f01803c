#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace stfc {

// Process-wide worker count used by every parallel loop in the library.
// 0 means "use hardware_concurrency". Results never depend on this value:
// each index is computed by exactly one worker with a fixed inner order.
void set_num_threads(int n);
int num_threads();

// Calls fn(begin, end) on disjoint contiguous ranges covering [begin, end).
// threads <= 0 uses the global setting.
template <class Fn>
void parallel_for(std::int64_t begin, std::int64_t end, Fn&& fn, int threads = 0) {
    const std::int64_t count = end - begin;
    if (count <= 0) return;
    int t = threads > 0 ? threads : num_threads();
    t = static_cast<int>(std::min<std::int64_t>(t, count));
    if (t <= 1) {
        fn(begin, end);
        return;
    }
    const std::int64_t chunk = (count + t - 1) / t;
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(t) - 1);
    for (int w = 1; w < t; ++w) {
        const std::int64_t lo = begin + w * chunk;
        const std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(begin, std::min(end, begin + chunk));
    for (auto& w : workers) w.join();
}

}  // namespace stfc
