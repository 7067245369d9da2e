#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bpdg {

/// Runs body(j) for j in [0, n) on `threads` workers with static contiguous
/// chunks. Each index is processed exactly once; the first exception is rethrown.
template <class Body>
void parallel_for(int n, int threads, Body&& body) {
    threads = std::clamp(threads, 1, std::max(1, n));
    if (threads == 1) {
        for (int j = 0; j < n; ++j) body(j);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            const int lo = static_cast<int>(static_cast<long long>(n) * t / threads);
            const int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / threads);
            workers.emplace_back([&, lo, hi] {
                try {
                    for (int j = lo; j < hi; ++j) body(j);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

} // namespace bpdg
