#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stamp {

// Runs fn(i) for i in [0, n) on up to max_threads workers. Work items must be
// independent. The first exception is rethrown on the caller after all
// workers finish; max_threads <= 1 (or 0 hardware threads) degrades to a
// plain loop.
template <typename Fn>
void parallel_for(size_t n, unsigned max_threads, Fn&& fn) {
    if (max_threads == 0) max_threads = std::thread::hardware_concurrency();
    const unsigned workers =
        static_cast<unsigned>(std::min<size_t>(n, std::max(1u, max_threads)));
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace stamp
