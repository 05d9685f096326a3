#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace rbsde {

// Thread count comes from RBSDE_THREADS when set, else the hardware.
// Results never depend on it: parallel loops only write disjoint,
// index-addressed slots and all reductions run serially afterwards.
inline unsigned thread_count() {
    if (const char* env = std::getenv("RBSDE_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(begin, end) over a static partition of [0, n).
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = thread_count();
    if (n == 0) return;
    if (workers <= 1 || n < 2 * workers) {
        fn(std::size_t{0}, n);
        return;
    }
    std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t b = std::min<std::size_t>(n, w * chunk);
        std::size_t e = std::min<std::size_t>(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

} // namespace rbsde
