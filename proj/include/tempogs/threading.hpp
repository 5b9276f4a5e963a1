#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace tempogs {

// Static block partition of [0, n) over `threads` workers. Each index is owned
// by exactly one worker, so per-pixel work is bit-identical to the sequential
// path for any thread count; only cross-thread reductions reorder sums.
inline void parallel_for(int threads, size_t n,
                         const std::function<void(size_t begin, size_t end, int worker)>& body) {
    if (threads <= 1 || n == 0) {
        body(0, n, 0);
        return;
    }
    const size_t nt = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const size_t chunk = (n + nt - 1) / nt;
    for (size_t t = 0; t < nt; ++t) {
        const size_t begin = t * chunk;
        const size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end, t] { body(begin, end, static_cast<int>(t)); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace tempogs
