// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace isocull {

// Runs f(begin, end) over contiguous chunks of [0, count). Results must be
// written to disjoint slots so output is independent of the worker count.
template <class F>
void parallel_for(std::size_t count, int workers, F&& f) {
    if (workers <= 1 || count < 2048) {
        f(std::size_t{0}, count);
        return;
    }
    std::size_t n = static_cast<std::size_t>(workers);
    if (n > count) n = count;
    std::size_t chunk = (count + n - 1) / n;
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (std::size_t w = 0; w < n; ++w) {
        std::size_t b = w * chunk;
        std::size_t e = b + chunk < count ? b + chunk : count;
        if (b >= e) break;
        pool.emplace_back([&f, b, e] { f(b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace isocull
