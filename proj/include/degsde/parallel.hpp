#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace degsde {

/// Resolves a requested worker count; 0 means one per hardware thread.
inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Work is handed
/// out in fixed-size chunks; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The exception from the lowest
/// failing chunk is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn, std::size_t chunk = 64) {
    threads = resolve_threads(threads);
    if (count == 0) return;
    if (threads == 1 || count <= chunk) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::size_t error_chunk = count;

    auto worker = [&] {
        while (true) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= count) return;
            const std::size_t end = std::min(count, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (begin < error_chunk) {
                    error_chunk = begin;
                    error = std::current_exception();
                }
            }
        }
    };
    const auto n = std::min<std::size_t>(threads, (count + chunk - 1) / chunk);
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace degsde
