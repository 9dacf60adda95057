#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ssav {

/// Worker count: `requested` if positive, else $SSAV_THREADS, else the
/// hardware concurrency.
inline int resolve_threads(int requested) {
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("SSAV_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) {
            return n;
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. Items are claimed
/// dynamically, so body must write only to slot i of preallocated output.
/// The first exception (lowest index) is rethrown after all workers stop.
inline void parallel_for(long n, int threads, const std::function<void(long)>& body) {
    const int workers = static_cast<int>(std::min<long>(resolve_threads(threads), std::max(1L, n)));
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<long> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::exception_ptr error;
    long error_index = n;
    auto run = [&] {
        for (long i = next++; i < n && !stop.load(std::memory_order_relaxed); i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back(run);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace ssav
