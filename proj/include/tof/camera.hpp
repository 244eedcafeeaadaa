// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tof/common.hpp"
#include "tof/grid.hpp"

namespace tof {

// Throughout the library, the time argument tau of camera functions and scene
// responses is HALF the total path travel time. A one-bounce return from
// depth d therefore has tau = d/c, and a multi-bounce path of total length L
// has tau = L/(2c).

enum class CameraKind { Sinusoid, ClippedSinusoid };

// Per-channel correlation response f(tau) of the sensor to light arriving at
// half-travel-time tau.
//   sinusoid:         f(tau) = b  * cos(psi - 2*omega*tau)
//   clipped-sinusoid: f(tau) = clamp(b1 * cos(psi - 2*omega*tau), -b2, b2)
struct CameraFunction {
    CameraKind kind = CameraKind::Sinusoid;
    double b = 1.0;     // sinusoid amplitude (sensor units)
    double b1 = 1.0;    // pre-clip amplitude (clipped kind)
    double b2 = 1.0;    // clip level (clipped kind)
    double psi = 0.0;   // phase offset, radians, in [0, 2*pi)
    double omega = 0.0; // angular modulation frequency, rad/s

    // Amplitude the channel contributes for a unit-energy return. Phase
    // estimation treats clipped channels as sinusoids of amplitude b1.
    double linear_gain() const { return kind == CameraKind::Sinusoid ? b : b1; }

    void validate() const {
        if (!(omega > 0.0)) throw ConfigError("CameraFunction: omega must be > 0");
        if (!(psi >= 0.0 && psi < two_pi))
            throw ConfigError("CameraFunction: psi must lie in [0, 2*pi)");
        if (kind == CameraKind::Sinusoid) {
            if (!(b > 0.0)) throw ConfigError("CameraFunction: b must be > 0");
        } else {
            if (!(b1 > 0.0 && b2 > 0.0))
                throw ConfigError("CameraFunction: b1 and b2 must be > 0");
        }
    }
};

inline CameraFunction make_sinusoid(double b, double psi, double omega) {
    CameraFunction f;
    f.kind = CameraKind::Sinusoid;
    f.b = b;
    f.psi = wrap_two_pi(psi);
    f.omega = omega;
    f.validate();
    return f;
}

inline CameraFunction make_clipped(double b1, double b2, double psi, double omega) {
    CameraFunction f;
    f.kind = CameraKind::ClippedSinusoid;
    f.b1 = b1;
    f.b2 = b2;
    f.psi = wrap_two_pi(psi);
    f.omega = omega;
    f.validate();
    return f;
}

inline double eval_camera_function(const CameraFunction& f, double tau) {
    double c = std::cos(f.psi - 2.0 * f.omega * tau);
    if (f.kind == CameraKind::Sinusoid) return f.b * c;
    return std::clamp(f.b1 * c, -f.b2, f.b2);
}

// Derivative df/dtau. For the clipped kind the derivative is 0 on the
// clamped plateaus (one-sided value at the transition points).
inline double eval_camera_function_dtau(const CameraFunction& f, double tau) {
    double arg = f.psi - 2.0 * f.omega * tau;
    if (f.kind == CameraKind::Sinusoid) return 2.0 * f.omega * f.b * std::sin(arg);
    if (std::abs(f.b1 * std::cos(arg)) >= f.b2) return 0.0;
    return 2.0 * f.omega * f.b1 * std::sin(arg);
}

// Acquisition layout: L modulation frequencies, K phase offsets each, one
// channel per (frequency, phase) pair in frequency-major order.
struct CameraConfig {
    int nx = 0, ny = 0;          // sensor resolution: x rows, y columns
    double hfov_deg = 70.0;      // horizontal field of view (spans the y axis)
    double exposure_s = 1.0;     // exposure T; recorded, not used numerically
    std::vector<double> omegas;  // rad/s, one per modulation frequency
    std::vector<CameraFunction> channels; // length K*L, frequency-major
    std::vector<int> channel_freq;        // channels[i] runs at omegas[channel_freq[i]]

    int n_channels() const { return static_cast<int>(channels.size()); }
    int n_freqs() const { return static_cast<int>(omegas.size()); }

    std::vector<int> channels_of(int freq) const {
        std::vector<int> out;
        for (int i = 0; i < n_channels(); ++i)
            if (channel_freq[i] == freq) out.push_back(i);
        return out;
    }

    double frequency_hz(int freq) const { return omegas[freq] / two_pi; }

    // Focal length in pixel units of the pinhole model.
    double focal_px() const { return (ny / 2.0) / std::tan(deg2rad(hfov_deg) / 2.0); }

    void validate() const {
        if (nx < 1 || ny < 1) throw ConfigError("CameraConfig: resolution must be >= 1x1");
        if (!(hfov_deg > 0.0 && hfov_deg < 180.0))
            throw ConfigError("CameraConfig: hfov must lie in (0, 180) degrees");
        if (omegas.empty()) throw ConfigError("CameraConfig: needs at least one frequency");
        for (double w : omegas)
            if (!(w > 0.0)) throw ConfigError("CameraConfig: omega must be > 0");
        if (channels.empty() || channels.size() != channel_freq.size())
            throw ConfigError("CameraConfig: channel list and frequency map disagree");
        std::vector<int> per_freq(omegas.size(), 0);
        for (std::size_t i = 0; i < channels.size(); ++i) {
            int f = channel_freq[i];
            if (f < 0 || f >= n_freqs())
                throw ConfigError("CameraConfig: channel frequency index out of range");
            if (channels[i].omega != omegas[f])
                throw ConfigError("CameraConfig: channel omega differs from its frequency");
            channels[i].validate();
            ++per_freq[f];
        }
        for (int k : per_freq)
            if (k < 2) throw ConfigError("CameraConfig: each frequency needs K >= 2 phases");
    }
};

// Uniform layout: K equally spaced phases 2*pi*k/K at every frequency, shared
// amplitude b, sinusoid channels.
inline CameraConfig make_uniform_config(const std::vector<double>& freqs_hz, int phases_per_freq,
                                        double b, int nx, int ny, double hfov_deg = 70.0,
                                        double exposure_s = 1.0) {
    if (phases_per_freq < 2) throw ConfigError("make_uniform_config: need K >= 2 phases");
    CameraConfig cfg;
    cfg.nx = nx;
    cfg.ny = ny;
    cfg.hfov_deg = hfov_deg;
    cfg.exposure_s = exposure_s;
    for (double f : freqs_hz) cfg.omegas.push_back(two_pi * f);
    for (int l = 0; l < static_cast<int>(freqs_hz.size()); ++l) {
        for (int k = 0; k < phases_per_freq; ++k) {
            cfg.channels.push_back(make_sinusoid(b, two_pi * k / phases_per_freq, cfg.omegas[l]));
            cfg.channel_freq.push_back(l);
        }
    }
    cfg.validate();
    return cfg;
}

// Unit view ray of pixel (x, y) for a pinhole camera at the origin looking
// along +z. Columns map to the first (horizontal) world axis, rows to the
// second (vertical) one.
struct Ray3 {
    double X, Y, Z;
};

inline Ray3 pixel_ray(const CameraConfig& cfg, int x, int y) {
    double f = cfg.focal_px();
    double cx = (cfg.nx - 1) / 2.0;
    double cy = (cfg.ny - 1) / 2.0;
    double X = (y - cy) / f;
    double Y = (x - cx) / f;
    double n = std::sqrt(X * X + Y * Y + 1.0);
    return {X / n, Y / n, 1.0 / n};
}

// Reconstructed (or ground-truth) depth image with an optional amplitude
// image; amplitude may be empty.
struct DepthMap {
    Grid2<double> d;         // meters
    Grid2<double> amplitude; // sensor units; empty if not tracked

    int nx() const { return d.nx(); }
    int ny() const { return d.ny(); }
};

} // namespace tof
