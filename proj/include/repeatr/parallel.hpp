#ifndef REPEATR_PARALLEL_HPP
#define REPEATR_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace repeatr {

/// Runs `task(k)` for k in [0, count) on up to `threads` workers. Tasks must
/// write only to their own output slot. The first exception thrown by any
/// task is rethrown after all workers stop.
template <typename Task>
void parallel_for(std::size_t count, std::size_t threads, Task&& task) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t k = 0; k < count; ++k) task(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const auto k = next.fetch_add(1, std::memory_order_relaxed);
            if (k >= count) return;
            try {
                task(k);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

} // namespace repeatr

#endif
