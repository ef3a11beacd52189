// parallel.hpp
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace meanbound {

/// Worker count: MEANBOUND_THREADS if set, else the hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("MEANBOUND_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {
// Set inside worker threads so nested loops run serially instead of oversubscribing.
inline thread_local bool in_parallel_region = false;
}  // namespace detail

/// Calls body(begin, end) over contiguous chunks of [0, count). Work is split
/// by index only, so output written at index i never depends on scheduling.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, std::size_t min_parallel = 64) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1 || count < min_parallel || detail::in_parallel_region) {
        if (count > 0) body(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&, begin, end] {
            detail::in_parallel_region = true;
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace meanbound
