// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/grid.hpp"
#include "tof/simulate.hpp"
#include "tof/transient.hpp"

namespace tof {

// 2-D affine transform on pixel coordinates: (x, y) -> (a00 x + a01 y + tx,
//                                                       a10 x + a11 y + ty).
struct Affine2D {
    double a00 = 1.0, a01 = 0.0, a10 = 0.0, a11 = 1.0;
    double tx = 0.0, ty = 0.0;

    static Affine2D identity() { return {}; }
    static Affine2D translation(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }

    double det() const { return a00 * a11 - a01 * a10; }

    void apply(double x, double y, double& ox, double& oy) const {
        ox = a00 * x + a01 * y + tx;
        oy = a10 * x + a11 * y + ty;
    }

    // this after other: compose(A, B)(p) = A(B(p)).
    friend Affine2D compose(const Affine2D& A, const Affine2D& B) {
        Affine2D r;
        r.a00 = A.a00 * B.a00 + A.a01 * B.a10;
        r.a01 = A.a00 * B.a01 + A.a01 * B.a11;
        r.a10 = A.a10 * B.a00 + A.a11 * B.a10;
        r.a11 = A.a10 * B.a01 + A.a11 * B.a11;
        r.tx = A.a00 * B.tx + A.a01 * B.ty + A.tx;
        r.ty = A.a10 * B.tx + A.a11 * B.ty + A.ty;
        return r;
    }

    Affine2D inverse() const {
        double dt = det();
        if (std::abs(dt) <= 1e-9) throw ConfigError("Affine2D: singular transform");
        Affine2D r;
        r.a00 = a11 / dt;
        r.a01 = -a01 / dt;
        r.a10 = -a10 / dt;
        r.a11 = a00 / dt;
        r.tx = -(r.a00 * tx + r.a01 * ty);
        r.ty = -(r.a10 * tx + r.a11 * ty);
        return r;
    }

    // n-fold application; negative n applies the inverse |n| times.
    Affine2D pow(int n) const {
        Affine2D base = n < 0 ? inverse() : *this;
        int k = n < 0 ? -n : n;
        Affine2D r = identity();
        for (int i = 0; i < k; ++i) r = compose(base, r);
        return r;
    }
};

// Per-step scene velocity: (vx, vy) in pixels per step, vz in meters per step.
struct Velocity3D {
    double vx = 0.0, vy = 0.0;
    double vz = 0.0;

    void validate() const {
        if (!std::isfinite(vx) || !std::isfinite(vy) || !std::isfinite(vz))
            throw ConfigError("Velocity3D: components must be finite");
    }
};

// Per-pixel displacement field for every non-reference channel, in channel
// order with the reference skipped.
struct FlowField {
    std::vector<Grid2<double>> dx, dy;

    int n_fields() const { return static_cast<int>(dx.size()); }
};

struct MotionLayer {
    RawFrames frames;
    Grid2<double> depth; // used for compositing between layers
};

// Bilinear sample of one tensor plane (in-bounds positions only).
inline double bilinear_plane(const Tensor3<double>& t, int k, double x, double y) {
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    if (x0 > t.nx() - 2) x0 = t.nx() - 2;
    if (y0 > t.ny() - 2) y0 = t.ny() - 2;
    if (x0 < 0) x0 = 0;
    if (y0 < 0) y0 = 0;
    int x1 = std::min(x0 + 1, t.nx() - 1);
    int y1 = std::min(y0 + 1, t.ny() - 1);
    double fx = x - x0, fy = y - y0;
    return t(k, x0, y0) * (1 - fx) * (1 - fy) + t(k, x0, y1) * (1 - fx) * fy +
           t(k, x1, y0) * fx * (1 - fy) + t(k, x1, y1) * fx * fy;
}

struct CompositeFrames {
    RawFrames frames;
    Mask covered; // every channel found an in-bounds winning sample
};

// Simulates inter-channel motion on already-correlated frames: channel j
// (1-based) of each layer is resampled at T^(j-center)(x, y), center =
// ceil(n_ch/2), then layers are composited per pixel and channel by the
// smallest warped depth (ties keep the lowest layer index). Out-of-bounds
// samples contribute value 0 at depth +inf.
inline CompositeFrames motion_method1(const std::vector<MotionLayer>& layers,
                                      const std::vector<Affine2D>& transforms) {
    if (layers.empty()) throw ConfigError("motion_method1: no layers");
    if (transforms.size() != layers.size())
        throw ConfigError("motion_method1: need exactly one transform per layer");
    const int n_ch = layers[0].frames.n_channels();
    const int nx = layers[0].frames.nx(), ny = layers[0].frames.ny();
    for (const auto& l : layers) {
        l.frames.validate();
        if (l.frames.n_channels() != n_ch || l.frames.nx() != nx || l.frames.ny() != ny ||
            l.depth.nx() != nx || l.depth.ny() != ny)
            throw ConfigError("motion_method1: layer dims mismatch");
    }

    const int center = (n_ch + 1) / 2; // 1-based channel index with T^0
    const int n_layers = static_cast<int>(layers.size());
    std::vector<Affine2D> warp(static_cast<std::size_t>(n_layers) * n_ch);
    for (int l = 0; l < n_layers; ++l)
        for (int j = 0; j < n_ch; ++j)
            warp[static_cast<std::size_t>(l) * n_ch + j] = transforms[l].pow(j + 1 - center);

    CompositeFrames out;
    out.frames.data = Tensor3<double>(n_ch, nx, ny);
    out.frames.channels = layers[0].frames.channels;
    out.frames.channel_freq = layers[0].frames.channel_freq;
    out.covered = Mask(nx, ny, 1);

    const double inf = std::numeric_limits<double>::infinity();
    parallel_for(static_cast<std::size_t>(nx) * ny, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t px = lo; px < hi; ++px) {
            int x = static_cast<int>(px) / ny;
            int y = static_cast<int>(px) % ny;
            for (int j = 0; j < n_ch; ++j) {
                double best_depth = inf;
                double best_val = 0.0;
                for (int l = 0; l < n_layers; ++l) {
                    double sx, sy;
                    warp[static_cast<std::size_t>(l) * n_ch + j].apply(x, y, sx, sy);
                    bool inside = false;
                    double d = bilinear(layers[l].depth, sx, sy, &inside);
                    if (!inside) continue;
                    if (d < best_depth) {
                        best_depth = d;
                        // frames and depth share dims, so this sample is in bounds too
                        best_val = bilinear_plane(layers[l].frames.data, j, sx, sy);
                    }
                }
                out.frames.data(j, x, y) = best_val;
                if (best_depth == inf) out.covered(x, y) = 0;
            }
        }
    });
    return out;
}

// Shifted copies of the scene response, one per step s: bins are shifted in
// time by round(s*vz/(c*dtau)) and resampled spatially at
// (x + s*vx, y + s*vy); step 0 returns the input unchanged.
inline std::vector<SceneResponse> motion_method2(const SceneResponse& sr, const Velocity3D& v,
                                                 const std::vector<int>& steps) {
    sr.validate();
    v.validate();
    const int n_tau = sr.n_tau();
    for (int s : steps)
        if (!(std::abs(s * v.vz / speed_of_light) < n_tau * sr.dtau))
            throw ConfigError("motion_method2: temporal shift out of range");

    std::vector<SceneResponse> out;
    out.reserve(steps.size());
    const std::size_t plane = sr.a.plane_size();
    for (int s : steps) {
        SceneResponse r;
        r.dtau = sr.dtau;
        r.t0 = sr.t0;
        if (s == 0) {
            r.a = sr.a;
            out.push_back(std::move(r));
            continue;
        }
        auto shift = static_cast<long>(std::lround(s * v.vz / (speed_of_light * sr.dtau)));
        r.a = Tensor3<double>(n_tau, sr.nx(), sr.ny());
        parallel_for(plane, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                int x = static_cast<int>(i) / sr.ny();
                int y = static_cast<int>(i) % sr.ny();
                double sx = x + s * v.vx;
                double sy = y + s * v.vy;
                if (!(sx >= 0.0) || !(sy >= 0.0) || !(sx <= sr.nx() - 1.0) ||
                    !(sy <= sr.ny() - 1.0))
                    continue; // out of bounds: stays zero
                for (int k = 0; k < n_tau; ++k) {
                    long k2 = k + shift;
                    if (k2 < 0 || k2 >= n_tau) continue;
                    r.a[static_cast<std::size_t>(k) * plane + i] =
                        bilinear_plane(sr.a, static_cast<int>(k2), sx, sy);
                }
            }
        });
        out.push_back(std::move(r));
    }
    return out;
}

struct WarpResult {
    RawFrames frames;
    Mask valid; // all warped channels sampled in bounds
};

// Backward bilinear warp of every non-reference channel by its flow field;
// channel c is sampled at (x, y) + flow_c(x, y). Out-of-bounds samples become
// 0 and clear the validity mask. reference = -1 selects the middle channel.
inline WarpResult warp_by_flow(const RawFrames& frames, const FlowField& flow,
                               int reference = -1) {
    frames.validate();
    const int n_ch = frames.n_channels();
    if (reference == -1) reference = (n_ch - 1) / 2;
    if (reference < 0 || reference >= n_ch)
        throw ConfigError("warp_by_flow: reference channel out of range");
    if (flow.n_fields() != n_ch - 1 || flow.dy.size() != flow.dx.size())
        throw ConfigError("warp_by_flow: need one flow field per non-reference channel");
    for (int i = 0; i < flow.n_fields(); ++i)
        if (flow.dx[i].nx() != frames.nx() || flow.dx[i].ny() != frames.ny() ||
            flow.dy[i].nx() != frames.nx() || flow.dy[i].ny() != frames.ny())
            throw ConfigError("warp_by_flow: flow dims mismatch");

    WarpResult out;
    out.frames = frames;
    out.valid = Mask(frames.nx(), frames.ny(), 1);

    int field = 0;
    for (int c = 0; c < n_ch; ++c) {
        if (c == reference) continue;
        const Grid2<double>& dx = flow.dx[field];
        const Grid2<double>& dy = flow.dy[field];
        ++field;
        double* o = out.frames.data.plane(c);
        parallel_for(frames.data.plane_size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                int x = static_cast<int>(i) / frames.ny();
                int y = static_cast<int>(i) % frames.ny();
                double sx = x + dx(x, y);
                double sy = y + dy(x, y);
                if (!(sx >= 0.0) || !(sy >= 0.0) || !(sx <= frames.nx() - 1.0) ||
                    !(sy <= frames.ny() - 1.0)) {
                    o[i] = 0.0;
                    out.valid(x, y) = 0;
                } else {
                    o[i] = bilinear_plane(frames.data, c, sx, sy);
                }
            }
        });
    }
    return out;
}

enum class KernelKind { CrossChannel, Spatial };

// Spatially varying kernels, one set per pixel: either an n_ch x n_ch
// channel-mixing matrix (entry (out, in) at plane out*n_ch + in), or a k x k
// spatial window (entry (r, c) at plane r*k + c) shared by all channels.
struct KernelMap {
    KernelKind kind = KernelKind::CrossChannel;
    int k = 1;         // spatial window size, odd (Spatial kind)
    Tensor3<double> w; // (n_ch*n_ch | k*k, nx, ny)

    void validate(int n_ch, int nx, int ny) const {
        if (w.nx() != nx || w.ny() != ny) throw ConfigError("KernelMap: dims mismatch");
        if (kind == KernelKind::CrossChannel) {
            if (w.n0() != n_ch * n_ch)
                throw ConfigError("KernelMap: cross-channel kind needs n_ch^2 planes");
        } else {
            if (k < 1 || k % 2 == 0) throw ConfigError("KernelMap: k must be odd");
            if (w.n0() != k * k) throw ConfigError("KernelMap: spatial kind needs k^2 planes");
        }
    }
};

// Applies each pixel's kernel to the raw frames. Spatial windows clamp at
// the image border.
inline RawFrames apply_pixel_kernels(const RawFrames& frames, const KernelMap& kmap) {
    frames.validate();
    const int n_ch = frames.n_channels();
    const int nx = frames.nx(), ny = frames.ny();
    kmap.validate(n_ch, nx, ny);

    RawFrames out = frames;
    parallel_for(static_cast<std::size_t>(nx) * ny, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t px = lo; px < hi; ++px) {
            int x = static_cast<int>(px) / ny;
            int y = static_cast<int>(px) % ny;
            if (kmap.kind == KernelKind::CrossChannel) {
                for (int o = 0; o < n_ch; ++o) {
                    double s = 0.0;
                    for (int c = 0; c < n_ch; ++c)
                        s += kmap.w(o * n_ch + c, x, y) * frames.data(c, x, y);
                    out.data(o, x, y) = s;
                }
            } else {
                int h = kmap.k / 2;
                for (int c = 0; c < n_ch; ++c) {
                    double s = 0.0;
                    for (int r = 0; r < kmap.k; ++r) {
                        int sx = std::clamp(x + r - h, 0, nx - 1);
                        for (int q = 0; q < kmap.k; ++q) {
                            int sy = std::clamp(y + q - h, 0, ny - 1);
                            s += kmap.w(r * kmap.k + q, x, y) * frames.data(c, sx, sy);
                        }
                    }
                    out.data(c, x, y) = s;
                }
            }
        }
    });
    return out;
}

} // namespace tof
