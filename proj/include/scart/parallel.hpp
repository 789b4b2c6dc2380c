#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace scart {

// Calls fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are
// captured per index and returned; the slot is null on success.
template <class F>
std::vector<std::exception_ptr> parallel_for(std::size_t n, unsigned jobs, F&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t width = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return errors;
}

}  // namespace scart
