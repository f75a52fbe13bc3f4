#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace retrieval {

inline unsigned default_thread_count()
{
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs fn(i) for every i in [0, n) on up to `threads` workers. Work items are handed
/// out dynamically. The first exception thrown by any item is rethrown after all
/// workers stop; remaining items are skipped once an error is seen.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
    if (n == 0) {
        return;
    }
    const auto workers = static_cast<std::size_t>(std::max(1U, threads));
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };

    {
        std::vector<std::jthread> pool;
        const std::size_t count = std::min(workers, n);
        pool.reserve(count - 1);
        for (std::size_t t = 1; t < count; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace retrieval
