#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace trajkrotov {

/// Runs f(0..n-1) on up to `workers` threads with a static strided split.
/// The first exception (by thread index) is rethrown after all threads join.
template <class F>
void parallel_for(int n, int workers, F&& f)
{
    const int w = std::min(std::max(workers, 1), n);
    if (w <= 1) {
        for (int k = 0; k < n; ++k) f(k);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
    {
        std::vector<std::jthread> threads;
        for (int t = 0; t < w; ++t)
            threads.emplace_back([&, t] {
                try {
                    for (int k = t; k < n; k += w) f(k);
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace trajkrotov
