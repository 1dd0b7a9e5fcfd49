#include "weathergs/threading.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace wgs {

namespace {
int g_threads = 0;  // 0 = auto

int resolved_threads() {
    if (g_threads > 0) return g_threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}
}  // namespace

void set_thread_count(int n) { g_threads = n < 0 ? 0 : n; }

int thread_count() { return resolved_threads(); }

void parallel_for(size_t n, size_t chunk, const std::function<void(size_t, size_t)>& fn) {
    if (n == 0) return;
    if (chunk == 0) chunk = 1;
    const size_t num_chunks = (n + chunk - 1) / chunk;
    const int workers = resolved_threads();
    if (workers <= 1 || num_chunks <= 1) {
        for (size_t c = 0; c < num_chunks; ++c) {
            const size_t b = c * chunk;
            fn(b, std::min(n, b + chunk));
        }
        return;
    }

    std::atomic<size_t> next{0};
    auto run = [&]() {
        for (;;) {
            const size_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= num_chunks) return;
            const size_t b = c * chunk;
            fn(b, std::min(n, b + chunk));
        }
    };

    std::vector<std::thread> pool;
    const int spawned = static_cast<int>(std::min<size_t>(workers, num_chunks)) - 1;
    pool.reserve(spawned);
    for (int i = 0; i < spawned; ++i) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
}

}  // namespace wgs
