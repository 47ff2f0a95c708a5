#pragma once

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <thread>
#include <vector>

namespace nlab {

namespace detail {

inline std::atomic<unsigned>& thread_setting()
{
    static std::atomic<unsigned> value{0};
    return value;
}

}  // namespace detail

/// Number of worker threads for site-parallel maps. Zero (the default) means
/// NOETHERLAB_THREADS if set, else std::thread::hardware_concurrency().
inline void set_thread_count(unsigned n) { detail::thread_setting() = n; }

inline unsigned thread_count()
{
    if (unsigned n = detail::thread_setting(); n > 0) return n;
    if (const char* env = std::getenv("NOETHERLAB_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Each index is written by exactly one
/// thread, so results do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body)
{
    constexpr std::size_t serial_cutoff = 8192;
    const unsigned workers = std::min<std::size_t>(thread_count(), (n + serial_cutoff - 1) / serial_cutoff);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
}

/// Pairwise (cascade) summation with a fixed tree shape that depends only on
/// the input length.
template <class T>
T pairwise_sum(std::span<const T> v)
{
    constexpr std::size_t leaf = 16;
    if (v.size() <= leaf) {
        T acc{};
        for (const auto& x : v) acc += x;
        return acc;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace nlab
