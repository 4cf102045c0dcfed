#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cvi {

/// Runs fn(begin, end) over contiguous chunks of [0, count) on up to `workers`
/// threads. Chunks write disjoint outputs, so results do not depend on the
/// worker count. The first exception thrown by any chunk is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        fn(std::size_t{0}, count);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) {
            break;
        }
        threads.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace cvi
