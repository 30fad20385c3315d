#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace aiq {

// Splits [begin, end) into `threads` contiguous chunks and runs fn(lo, hi)
// on each. Each index is owned by exactly one chunk, so results never
// depend on scheduling.
template <typename Fn>
void parallel_for(int64_t begin, int64_t end, int threads, Fn&& fn) {
    int64_t n = end - begin;
    if (n <= 0) return;
    if (threads < 1) threads = 1;
    if (threads == 1 || n == 1) {
        fn(begin, end);
        return;
    }
    int64_t nthreads = std::min<int64_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nthreads - 1));
    int64_t chunk = (n + nthreads - 1) / nthreads;
    for (int64_t t = 1; t < nthreads; ++t) {
        int64_t lo = begin + t * chunk;
        int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(begin, std::min(end, begin + chunk));
    for (auto& th : pool) th.join();
}

}  // namespace aiq
