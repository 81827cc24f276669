#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace osgrf {

// Runs f(i) for i in [0, n) on `workers` threads. Callers write results into
// slots indexed by i and reduce afterwards in index order, so the outcome does
// not depend on the number of workers.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& f)
{
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace osgrf
