// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <cstdint>

namespace tof {

namespace detail {
// SplitMix64 finalizer; full-avalanche 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

// Counter-based uniform draw on [0, 1). The value is a pure function of the
// key (seed, c0, c1, c2), so draws are reproducible under any thread layout
// or evaluation order. Keys are (seed, channel, x, y) for per-pixel noise.
inline double counter_u01(std::uint64_t seed, std::uint64_t c0, std::uint64_t c1,
                          std::uint64_t c2) {
    std::uint64_t h = detail::mix64(seed);
    h = detail::mix64(h ^ c0);
    h = detail::mix64(h ^ c1);
    h = detail::mix64(h ^ c2);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Integer variant: uniform draw on [0, n). n must be > 0.
inline std::uint64_t counter_index(std::uint64_t seed, std::uint64_t c0, std::uint64_t c1,
                                   std::uint64_t c2, std::uint64_t n) {
    auto i = static_cast<std::uint64_t>(counter_u01(seed, c0, c1, c2) * static_cast<double>(n));
    return i >= n ? n - 1 : i;
}

} // namespace tof
