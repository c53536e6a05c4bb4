#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace advdet {

// Runs f(i) for i in [0, n) across up to `jobs` threads. Each index writes
// only into its own output slot, so results do not depend on scheduling
// and jobs=1 reproduces jobs=N exactly.
template <typename F>
void parallel_for(int64_t n, int jobs, F&& f) {
    if (n <= 0) return;
    if (jobs <= 1 || n == 1) {
        for (int64_t i = 0; i < n; ++i) f(i);
        return;
    }
    const int workers = static_cast<int>(std::min<int64_t>(jobs, n));
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            try {
                for (int64_t i = w; i < n; i += workers) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace advdet
