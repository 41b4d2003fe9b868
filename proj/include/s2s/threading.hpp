#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace s2s {

// Worker cap: S2S_THREADS env var if set, else hardware concurrency.
inline int max_workers() {
    if (const char* env = std::getenv("S2S_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker; fn must only write to slots owned by its own indices, which keeps
// results identical for any worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = std::min<std::size_t>(max_workers(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}
