#include "swflow/threading.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace swflow {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(std::max(1, n)); }
int thread_count() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t min_parallel) {
    const int workers = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(thread_count()), n));
    if (workers <= 1 || n < min_parallel) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::atomic<std::size_t> next{0};
    const std::size_t kChunk = std::max<std::size_t>(1, std::min<std::size_t>(256, n / (2 * workers)));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t begin = next.fetch_add(kChunk);
                if (begin >= n) return;
                const std::size_t end = std::min(begin + kChunk, n);
                for (std::size_t i = begin; i < end; ++i) fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

}  // namespace swflow
