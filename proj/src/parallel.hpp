#ifndef OMX_PARALLEL_HPP
#define OMX_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace omx {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::max(1u, std::min(hw, 16u)));
}

/// Runs fn(i) for i in [0, count) over a fixed 16-item chunk schedule so that
/// results written into preallocated slots are identical for any thread count.
/// Nested calls run inline on the calling thread.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
    thread_local bool inside = false;
    const int n_threads = resolve_threads(threads);
    if (count == 0) return;
    if (inside || n_threads <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    constexpr std::size_t kChunk = 16;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        inside = true;
        for (;;) {
            const std::size_t start = next.fetch_add(kChunk);
            if (start >= count) break;
            const std::size_t stop = std::min(count, start + kChunk);
            for (std::size_t i = start; i < stop; ++i) fn(i);
        }
        inside = false;
    };
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<std::size_t>(n_threads, count)) - 1;
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int i = 0; i < spawn; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace omx

#endif
