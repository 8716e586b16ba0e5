#pragma once

#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace decu {

// DECU_THREADS caps worker count; 0, empty or unset means hardware concurrency.
inline unsigned thread_cap() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const char* env = std::getenv("DECU_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    const long v = std::strtol(env, nullptr, 10);
    if (v <= 0) return hw;
    return v > 256 ? 256u : static_cast<unsigned>(v);
}

// Static contiguous partition over [0, n). f(i) must only touch state owned
// by index i; results are then identical for any worker count.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers = std::min<std::size_t>(thread_cap(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = w * n / workers;
            const std::size_t hi = (w + 1) * n / workers;
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace decu
