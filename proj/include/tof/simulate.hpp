// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/grid.hpp"
#include "tof/rng.hpp"
#include "tof/transient.hpp"

namespace tof {

// One raw correlation measurement per camera channel: the discretized
// correlation of the scene response with each camera function.
struct RawFrames {
    Tensor3<double> data;                 // (n_ch, nx, ny)
    std::vector<CameraFunction> channels; // acquisition order, from CameraConfig
    std::vector<int> channel_freq;

    int n_channels() const { return data.n0(); }
    int nx() const { return data.nx(); }
    int ny() const { return data.ny(); }

    void validate() const {
        if (channels.size() != static_cast<std::size_t>(data.n0()) ||
            channel_freq.size() != channels.size())
            throw ConfigError("RawFrames: channel metadata does not match tensor");
    }
};

// i_ch(x,y) = sum_k a(k,x,y) * f_ch(t0 + k*dtau). All-zero time planes are
// skipped; single-bounce responses touch only a handful of bins.
inline RawFrames correlate(const SceneResponse& sr, const CameraConfig& cfg) {
    sr.validate();
    cfg.validate();
    if (sr.nx() != cfg.nx || sr.ny() != cfg.ny)
        throw ConfigError("correlate: response dims do not match camera resolution");

    const int n_tau = sr.n_tau();
    const int n_ch = cfg.n_channels();
    const std::size_t plane = sr.a.plane_size();

    std::vector<char> live(n_tau, 0);
    parallel_for(static_cast<std::size_t>(n_tau), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            const double* p = sr.a.plane(static_cast<int>(k));
            for (std::size_t i = 0; i < plane; ++i) {
                if (p[i] != 0.0) {
                    live[k] = 1;
                    break;
                }
            }
        }
    });

    std::vector<double> f_table(static_cast<std::size_t>(n_ch) * n_tau);
    for (int j = 0; j < n_ch; ++j)
        for (int k = 0; k < n_tau; ++k)
            f_table[static_cast<std::size_t>(j) * n_tau + k] =
                eval_camera_function(cfg.channels[j], sr.t0 + k * sr.dtau);

    RawFrames out;
    out.data = Tensor3<double>(n_ch, cfg.nx, cfg.ny);
    out.channels = cfg.channels;
    out.channel_freq = cfg.channel_freq;

    parallel_for(plane, [&](std::size_t lo, std::size_t hi) {
        for (int j = 0; j < n_ch; ++j) {
            double* o = out.data.plane(j);
            const double* f = f_table.data() + static_cast<std::size_t>(j) * n_tau;
            for (int k = 0; k < n_tau; ++k) {
                if (!live[k]) continue;
                const double* p = sr.a.plane(k);
                double fk = f[k];
                for (std::size_t i = lo; i < hi; ++i) o[i] += fk * p[i];
            }
        }
    });
    return out;
}

// Single-channel correlation against one camera function.
inline Grid2<double> correlate_channel(const SceneResponse& sr, const CameraFunction& f) {
    sr.validate();
    f.validate();
    const int n_tau = sr.n_tau();
    std::vector<double> tab(n_tau);
    for (int k = 0; k < n_tau; ++k) tab[k] = eval_camera_function(f, sr.t0 + k * sr.dtau);

    Grid2<double> out(sr.nx(), sr.ny(), 0.0);
    const std::size_t plane = sr.a.plane_size();
    parallel_for(plane, [&](std::size_t lo, std::size_t hi) {
        for (int k = 0; k < n_tau; ++k) {
            const double* p = sr.a.plane(k);
            double fk = tab[k];
            for (std::size_t i = lo; i < hi; ++i) out[i] += fk * p[i];
        }
    });
    return out;
}

// Shared per-pixel gain (vignetting or surface texture) across all channels.
inline RawFrames apply_gain_map(const RawFrames& frames, const Grid2<double>& gain) {
    frames.validate();
    if (gain.nx() != frames.nx() || gain.ny() != frames.ny())
        throw ConfigError("apply_gain_map: gain dims mismatch");
    for (double g : gain)
        if (!(g >= 0.0)) throw ConfigError("apply_gain_map: gain must be >= 0");

    RawFrames out = frames;
    const std::size_t plane = frames.data.plane_size();
    for (int j = 0; j < frames.n_channels(); ++j) {
        double* o = out.data.plane(j);
        const double* g = gain.data();
        for (std::size_t i = 0; i < plane; ++i) o[i] *= g[i];
    }
    return out;
}

// Per-pixel time shift of the scene response by round(delay/dtau) bins.
// Truncated bins are dropped; vacated bins are zero.
inline SceneResponse apply_pixel_delay(const SceneResponse& sr, const Grid2<double>& delay) {
    sr.validate();
    if (delay.nx() != sr.nx() || delay.ny() != sr.ny())
        throw ConfigError("apply_pixel_delay: delay dims mismatch");
    const int n_tau = sr.n_tau();
    for (double d : delay)
        if (!(std::abs(d) < n_tau * sr.dtau))
            throw ConfigError("apply_pixel_delay: delay out of range");

    SceneResponse out;
    out.a = Tensor3<double>(n_tau, sr.nx(), sr.ny());
    out.dtau = sr.dtau;
    out.t0 = sr.t0;
    const std::size_t plane = sr.a.plane_size();
    parallel_for(plane, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto shift = static_cast<long>(std::lround(delay[i] / sr.dtau));
            for (int k = 0; k < n_tau; ++k) {
                long k2 = k + shift;
                if (k2 < 0 || k2 >= n_tau) continue;
                out.a[static_cast<std::size_t>(k2) * plane + i] =
                    sr.a[static_cast<std::size_t>(k) * plane + i];
            }
        }
    });
    return out;
}

// Empirical noise model: expected raw value -> table of observed noisy
// samples, binned uniformly over the expected-value span.
struct NoiseLUT {
    std::vector<double> edges;              // n_bins + 1 ascending bin edges
    std::vector<std::vector<double>> table; // per-bin samples, all nonempty

    int n_bins() const { return static_cast<int>(table.size()); }

    int bin_of(double v) const {
        double lo = edges.front(), hi = edges.back();
        int nb = n_bins();
        auto b = static_cast<long>(std::floor((v - lo) / (hi - lo) * nb));
        return static_cast<int>(std::clamp(b, 0L, static_cast<long>(nb - 1)));
    }

    void validate() const {
        if (table.size() < 2) throw ConfigError("NoiseLUT: needs >= 2 bins");
        if (edges.size() != table.size() + 1) throw ConfigError("NoiseLUT: edge count mismatch");
        for (std::size_t i = 1; i < edges.size(); ++i)
            if (!(edges[i] > edges[i - 1]))
                throw ConfigError("NoiseLUT: edges must be strictly increasing");
        for (const auto& t : table)
            if (t.empty()) throw ConfigError("NoiseLUT: empty bin table");
    }
};

// Builds the lookup table from (expected value, noisy sample) pairs. Empty
// bins inherit the nearest nonempty bin's table (lower index on ties).
inline NoiseLUT build_noise_lut(const std::vector<std::pair<double, double>>& pairs,
                                int n_bins) {
    if (pairs.empty()) throw ConfigError("build_noise_lut: empty input");
    if (n_bins < 2) throw ConfigError("build_noise_lut: need >= 2 bins");

    double lo = pairs[0].first, hi = pairs[0].first;
    for (const auto& pr : pairs) {
        lo = std::min(lo, pr.first);
        hi = std::max(hi, pr.first);
    }
    if (!(hi > lo)) hi = lo + 1.0; // degenerate span: single expected value

    NoiseLUT lut;
    lut.edges.resize(n_bins + 1);
    for (int b = 0; b <= n_bins; ++b) lut.edges[b] = lo + (hi - lo) * b / n_bins;
    lut.table.assign(n_bins, {});
    for (const auto& pr : pairs) lut.table[lut.bin_of(pr.first)].push_back(pr.second);

    std::vector<int> src(n_bins, -1);
    for (int b = 0; b < n_bins; ++b) {
        if (!lut.table[b].empty()) {
            src[b] = b;
            continue;
        }
        for (int step = 1; step < n_bins; ++step) {
            int l = b - step, r = b + step;
            if (l >= 0 && !lut.table[l].empty()) {
                src[b] = l;
                break;
            }
            if (r < n_bins && !lut.table[r].empty()) {
                src[b] = r;
                break;
            }
        }
    }
    for (int b = 0; b < n_bins; ++b)
        if (src[b] != b) lut.table[b] = lut.table[src[b]];

    lut.validate();
    return lut;
}

// Replaces each clean value with a bootstrap draw from its expected-value
// bin. Deterministic: the draw is keyed on (seed, channel, x, y) only, so the
// result is identical under any thread layout. Values outside the lut span
// use the nearest edge bin.
inline RawFrames sample_noise(const NoiseLUT& lut, const RawFrames& clean,
                              std::uint64_t seed) {
    lut.validate();
    clean.validate();
    RawFrames out = clean;
    const std::size_t plane = clean.data.plane_size();
    const int ny = clean.ny();
    for (int j = 0; j < clean.n_channels(); ++j) {
        double* o = out.data.plane(j);
        const double* in = clean.data.plane(j);
        parallel_for(plane, [&](std::size_t lo_i, std::size_t hi_i) {
            for (std::size_t i = lo_i; i < hi_i; ++i) {
                const auto& t = lut.table[lut.bin_of(in[i])];
                auto x = static_cast<std::uint64_t>(i / ny);
                auto y = static_cast<std::uint64_t>(i % ny);
                o[i] = t[counter_index(seed, static_cast<std::uint64_t>(j), x, y, t.size())];
            }
        });
    }
    return out;
}

} // namespace tof
