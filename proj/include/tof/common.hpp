// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tof {

inline constexpr double speed_of_light = 299792458.0; // m/s
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Malformed configuration or an invalid argument combination.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File or stream failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numeric routine could not produce a usable result.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double deg2rad(double deg) { return deg * (pi / 180.0); }

// Wraps x into [0, 2*pi).
inline double wrap_two_pi(double x) {
    double r = std::fmod(x, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0; // fmod can land exactly on 2*pi after the add
    return r;
}

namespace detail {
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> n{0};
    return n;
}
} // namespace detail

// 0 restores the default (hardware concurrency).
inline void set_thread_count(int n) { detail::thread_count_slot().store(n < 0 ? 0 : n); }

inline int thread_count() {
    int n = detail::thread_count_slot().load();
    if (n > 0) return n;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(begin, end) over disjoint index blocks. The block split depends only
// on n and the configured thread count, and no block overlaps another, so any
// per-index computation gives results independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    auto workers = static_cast<std::size_t>(thread_count());
    if (workers > n) workers = n;
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t b = w * chunk;
        std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

} // namespace tof
