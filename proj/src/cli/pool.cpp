#include "icmvc/cli/pool.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace icmvc::cli {

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) task(i);
        });
    }
    for (auto& t : threads) t.join();
}

unsigned default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

}  // namespace icmvc::cli
