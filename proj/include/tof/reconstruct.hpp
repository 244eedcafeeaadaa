// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "tof/calibrate.hpp" // detail::solve_small
#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/grid.hpp"
#include "tof/simulate.hpp"

namespace tof {

// ---------------------------------------------------------------------------
// Single-frequency phase estimation
// ---------------------------------------------------------------------------

// Least-squares phase estimate at one modulation frequency. For channels
// i_k = a*b_k*cos(psi_k - theta) the model is linear in (u, v) =
// (a cos theta, a sin theta) with basis g_k = (b_k cos psi_k, b_k sin psi_k);
// the 2x2 normal equations give (u, v), then theta = atan2(v, u) in [0, 2*pi)
// and amplitude = hypot(u, v). With K equally spaced phases and equal b this
// reduces to the classic arctangent of the sine/cosine dot products with
// amplitude (2/K)*sqrt(.)/b.
struct PhaseEstimate {
    Grid2<double> phase;     // theta in [0, 2*pi)
    Grid2<double> amplitude; // estimated return amplitude a
    Mask valid;
    double omega = 0.0;
};

namespace detail {

// Per-channel weights (alpha_k, beta_k) = N^{-1} g_k of the phase design at
// one frequency; (u, v) = sum_k i_k * (alpha_k, beta_k).
struct PhaseDesign {
    std::vector<int> ch;    // channel indices at this frequency
    std::vector<double> alpha, beta;
    double omega = 0.0;
};

inline PhaseDesign phase_design(const RawFrames& frames, int freq) {
    PhaseDesign pd;
    for (int i = 0; i < frames.n_channels(); ++i)
        if (frames.channel_freq[i] == freq) pd.ch.push_back(i);
    if (pd.ch.size() < 2)
        throw ConfigError("phase estimation: K >= 2 phases required per frequency");

    pd.omega = frames.channels[pd.ch[0]].omega;
    double n00 = 0, n01 = 0, n11 = 0;
    std::vector<double> gc(pd.ch.size()), gs(pd.ch.size());
    for (std::size_t k = 0; k < pd.ch.size(); ++k) {
        const CameraFunction& f = frames.channels[pd.ch[k]];
        if (f.omega != pd.omega)
            throw ConfigError("phase estimation: mixed omegas within one frequency");
        gc[k] = f.linear_gain() * std::cos(f.psi);
        gs[k] = f.linear_gain() * std::sin(f.psi);
        n00 += gc[k] * gc[k];
        n01 += gc[k] * gs[k];
        n11 += gs[k] * gs[k];
    }
    double det = n00 * n11 - n01 * n01;
    if (!(std::abs(det) > 1e-12 * std::max(1.0, n00 * n11)))
        throw ConfigError("phase estimation: phase offsets do not span the circle");
    pd.alpha.resize(pd.ch.size());
    pd.beta.resize(pd.ch.size());
    for (std::size_t k = 0; k < pd.ch.size(); ++k) {
        pd.alpha[k] = (n11 * gc[k] - n01 * gs[k]) / det;
        pd.beta[k] = (-n01 * gc[k] + n00 * gs[k]) / det;
    }
    return pd;
}

} // namespace detail

inline PhaseEstimate estimate_phase(const RawFrames& frames, int freq) {
    frames.validate();
    detail::PhaseDesign pd = detail::phase_design(frames, freq);

    PhaseEstimate pe;
    pe.omega = pd.omega;
    pe.phase = Grid2<double>(frames.nx(), frames.ny());
    pe.amplitude = Grid2<double>(frames.nx(), frames.ny());
    pe.valid = Mask(frames.nx(), frames.ny(), 0);

    const std::size_t plane = frames.data.plane_size();
    parallel_for(plane, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double u = 0.0, v = 0.0;
            for (std::size_t k = 0; k < pd.ch.size(); ++k) {
                double val = frames.data.plane(pd.ch[k])[i];
                u += pd.alpha[k] * val;
                v += pd.beta[k] * val;
            }
            double amp = std::hypot(u, v);
            pe.amplitude[i] = amp;
            if (!std::isfinite(amp) || amp < 1e-300) {
                pe.phase[i] = 0.0; // degenerate: both dot products vanish
                continue;
            }
            pe.phase[i] = wrap_two_pi(std::atan2(v, u));
            pe.valid[i] = 1;
        }
    });
    return pe;
}

// Wrapped depth at a single frequency: d = c*theta/(2*omega) in [0, pi*c/omega).
inline std::pair<DepthMap, Mask> phase_depth_single(const RawFrames& frames, int freq) {
    PhaseEstimate pe = estimate_phase(frames, freq);
    DepthMap dm;
    dm.d = Grid2<double>(frames.nx(), frames.ny());
    dm.amplitude = pe.amplitude;
    for (std::size_t i = 0; i < dm.d.size(); ++i)
        dm.d[i] = speed_of_light * pe.phase[i] / (2.0 * pe.omega);
    return {std::move(dm), std::move(pe.valid)};
}

// ---------------------------------------------------------------------------
// Multi-frequency unwrapping
// ---------------------------------------------------------------------------

// Constants of the linear unwrapping formula d = sum_l A_l*phi_l + B, valid
// while the wrap counts stay fixed: A_l = c/(2*L*omega_l), and
// B = (1/L) * sum_l n_l * R_l for wrap counts n_l with per-frequency wrap
// period R_l = pi*c/omega_l. Requires commensurate frequencies
// omega_l = m_l * omega_g with integer m_l, gcd(m) = 1; the common
// unambiguous range is d_max = pi*c/omega_g.
struct UnwrapConstants {
    std::vector<double> A;
    std::vector<long long> m;
    std::vector<double> wrap_range; // R_l = d_max / m_l
    double omega_g = 0.0;
    double d_max = 0.0;

    int L() const { return static_cast<int>(A.size()); }

    double offset_B(const std::vector<int>& wrap_counts) const {
        double b = 0.0;
        for (int l = 0; l < L(); ++l) b += wrap_counts[l] * wrap_range[l];
        return b / L();
    }
};

namespace detail {

// Best rational approximation p/q of x > 0 with q <= max_den (continued
// fractions).
inline void rational_approx(double x, long long max_den, long long& p, long long& q) {
    long long p0 = 1, q0 = 0;
    long long p1 = static_cast<long long>(std::floor(x)), q1 = 1;
    double frac = x - std::floor(x);
    for (int it = 0; it < 64 && frac > 1e-14; ++it) {
        double inv = 1.0 / frac;
        auto a = static_cast<long long>(std::floor(inv));
        frac = inv - static_cast<double>(a);
        long long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <
            1e-13 * std::abs(x))
            break;
    }
    p = p1;
    q = q1;
}

inline long long modinv(long long b, long long a) {
    // inverse of b modulo a, gcd(b, a) = 1
    long long t = 0, new_t = 1, r = a, new_r = ((b % a) + a) % a;
    while (new_r != 0) {
        long long quot = r / new_r;
        long long tmp = t - quot * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - quot * new_r;
        r = new_r;
        new_r = tmp;
    }
    return ((t % a) + a) % a;
}

} // namespace detail

inline UnwrapConstants make_unwrap_constants(const std::vector<double>& omegas) {
    if (omegas.empty()) throw ConfigError("unwrap constants: no frequencies");
    for (double w : omegas)
        if (!(w > 0.0)) throw ConfigError("unwrap constants: omega must be > 0");

    const int L = static_cast<int>(omegas.size());
    const long long max_den = 1000000;
    std::vector<long long> p(L), q(L);
    for (int l = 0; l < L; ++l) detail::rational_approx(omegas[l] / omegas[0], max_den, p[l], q[l]);

    long long Q = 1;
    for (int l = 0; l < L; ++l) {
        long long g = std::gcd(Q, q[l]);
        if (Q / g > (1LL << 40) / q[l])
            throw ConfigError("unwrap constants: incommensurate frequencies");
        Q = Q / g * q[l];
    }
    std::vector<long long> m(L);
    long long g_all = 0;
    for (int l = 0; l < L; ++l) {
        m[l] = p[l] * (Q / q[l]);
        if (m[l] <= 0) throw ConfigError("unwrap constants: invalid frequency ratio");
        g_all = std::gcd(g_all, m[l]);
    }
    for (int l = 0; l < L; ++l) m[l] /= g_all;
    // A genuinely commensurate set reduces to a small lattice; irrational
    // ratios rationalize to huge co-prime multipliers instead.
    for (long long v : m)
        if (v > 100000) throw ConfigError("unwrap constants: incommensurate frequencies");

    UnwrapConstants uc;
    uc.m = m;
    uc.omega_g = omegas[0] / static_cast<double>(m[0]);
    for (int l = 0; l < L; ++l)
        if (std::abs(omegas[l] - static_cast<double>(m[l]) * uc.omega_g) > 1e-9 * omegas[l])
            throw ConfigError("unwrap constants: incommensurate frequencies");
    uc.d_max = pi * speed_of_light / uc.omega_g;
    uc.A.resize(L);
    uc.wrap_range.resize(L);
    for (int l = 0; l < L; ++l) {
        uc.A[l] = speed_of_light / (2.0 * L * omegas[l]);
        uc.wrap_range[l] = pi * speed_of_light / omegas[l];
    }
    return uc;
}

struct UnwrapResult {
    DepthMap depth;                        // fused depth in [0, d_max)
    std::vector<Grid2<double>> per_freq;   // per-frequency unwrapped depths
    std::vector<Grid2<int>> wrap_counts;   // chosen n_l in [0, m_l)
    Mask valid;
};

// Closed-form multi-frequency unwrapping: resolves the per-frequency wrap
// counts by merging the wrapped depths pairwise over the residue lattice
// (each merge rounds to the nearest consistent residue class), then averages
// the unwrapped per-frequency depths. Equivalent to d = sum A_l*phi_l +
// B(wrap counts) with the UnwrapConstants above.
inline UnwrapResult unwrap_crt(const std::vector<Grid2<double>>& phases,
                               const std::vector<double>& omegas, const UnwrapConstants& uc,
                               const std::vector<Mask>* valids = nullptr) {
    const int L = uc.L();
    if (static_cast<int>(phases.size()) != L || static_cast<int>(omegas.size()) != L)
        throw ConfigError("unwrap_crt: phase/frequency count mismatch");
    for (int l = 0; l < L; ++l)
        if (std::abs(omegas[l] - static_cast<double>(uc.m[l]) * uc.omega_g) > 1e-9 * omegas[l])
            throw ConfigError("unwrap_crt: constants do not match the frequencies");
    const int nx = phases[0].nx(), ny = phases[0].ny();
    for (const auto& g : phases)
        if (g.nx() != nx || g.ny() != ny) throw ConfigError("unwrap_crt: dims mismatch");
    if (valids && static_cast<int>(valids->size()) != L)
        throw ConfigError("unwrap_crt: validity count mismatch");

    UnwrapResult res;
    res.depth.d = Grid2<double>(nx, ny, std::numeric_limits<double>::quiet_NaN());
    res.valid = Mask(nx, ny, 0);
    res.per_freq.assign(L, Grid2<double>(nx, ny));
    res.wrap_counts.assign(L, Grid2<int>(nx, ny));

    const std::size_t n_px = static_cast<std::size_t>(nx) * ny;
    parallel_for(n_px, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> w(L);
        for (std::size_t i = lo; i < hi; ++i) {
            bool ok = true;
            if (valids)
                for (int l = 0; l < L; ++l) ok = ok && (*valids)[l][i];
            for (int l = 0; l < L; ++l) {
                double th = phases[l][i];
                if (!std::isfinite(th)) ok = false;
                w[l] = speed_of_light * wrap_two_pi(th) / (2.0 * omegas[l]);
            }
            if (!ok) continue;

            // Merge residue constraints d == w_l (mod R_l) one frequency at
            // a time; (e, mu) represents d == e (mod d_max/mu).
            double e = w[0];
            long long mu = uc.m[0];
            for (int l = 1; l < L; ++l) {
                long long g = std::gcd(mu, uc.m[l]);
                long long alpha = mu / g;
                long long beta = uc.m[l] / g;
                if (alpha > 1) {
                    double r = (w[l] - e) / uc.wrap_range[l];
                    long long K = std::llround(static_cast<double>(alpha) * r);
                    K = ((K % alpha) + alpha) % alpha;
                    long long n = (K * detail::modinv(beta, alpha)) % alpha;
                    e += static_cast<double>(n) * (uc.d_max / static_cast<double>(mu));
                }
                mu = g;
                double period = uc.d_max / static_cast<double>(mu);
                e = std::fmod(e, period);
                if (e < 0.0) e += period;
            }

            double acc = 0.0;
            for (int l = 0; l < L; ++l) {
                auto n = std::llround((e - w[l]) / uc.wrap_range[l]);
                n = ((n % uc.m[l]) + uc.m[l]) % uc.m[l];
                double ul = w[l] + static_cast<double>(n) * uc.wrap_range[l];
                res.per_freq[l][i] = ul;
                res.wrap_counts[l][i] = static_cast<int>(n);
                acc += ul;
            }
            res.depth.d[i] = acc / L;
            res.valid[i] = 1;
        }
    });
    return res;
}

// Search-based unwrapping for arbitrary (including incommensurate)
// frequencies: scans the wrap counts of the first frequency over
// [0, d_limit) and scores each candidate by the squared distances to the
// nearest wrapped replica of every other frequency.
inline UnwrapResult unwrap_search(const std::vector<Grid2<double>>& phases,
                                  const std::vector<double>& omegas, double d_limit,
                                  const std::vector<Mask>* valids = nullptr) {
    const int L = static_cast<int>(omegas.size());
    if (static_cast<int>(phases.size()) != L || L < 1)
        throw ConfigError("unwrap_search: phase/frequency count mismatch");
    if (!(d_limit > 0.0)) throw ConfigError("unwrap_search: d_limit must be > 0");
    const int nx = phases[0].nx(), ny = phases[0].ny();

    std::vector<double> R(L);
    for (int l = 0; l < L; ++l) R[l] = pi * speed_of_light / omegas[l];
    const auto n0_max = static_cast<long long>(std::ceil(d_limit / R[0]));

    UnwrapResult res;
    res.depth.d = Grid2<double>(nx, ny, std::numeric_limits<double>::quiet_NaN());
    res.valid = Mask(nx, ny, 0);
    res.per_freq.assign(L, Grid2<double>(nx, ny));
    res.wrap_counts.assign(L, Grid2<int>(nx, ny));

    parallel_for(static_cast<std::size_t>(nx) * ny, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> w(L);
        for (std::size_t i = lo; i < hi; ++i) {
            bool ok = true;
            if (valids)
                for (int l = 0; l < L; ++l) ok = ok && (*valids)[l][i];
            for (int l = 0; l < L; ++l) {
                double th = phases[l][i];
                if (!std::isfinite(th)) ok = false;
                w[l] = speed_of_light * wrap_two_pi(th) / (2.0 * omegas[l]);
            }
            if (!ok) continue;

            double best_score = std::numeric_limits<double>::infinity();
            double best_d = w[0];
            for (long long n0 = 0; n0 < n0_max; ++n0) {
                double d0 = w[0] + static_cast<double>(n0) * R[0];
                if (d0 >= d_limit) break;
                double score = 0.0;
                for (int l = 1; l < L; ++l) {
                    double u = w[l] + R[l] * std::round((d0 - w[l]) / R[l]);
                    score += (u - d0) * (u - d0);
                }
                if (score < best_score) {
                    best_score = score;
                    best_d = d0;
                }
            }

            double acc = 0.0;
            for (int l = 0; l < L; ++l) {
                auto n = std::llround((best_d - w[l]) / R[l]);
                if (n < 0) n = 0;
                double ul = w[l] + static_cast<double>(n) * R[l];
                res.per_freq[l][i] = ul;
                res.wrap_counts[l][i] = static_cast<int>(n);
                acc += ul;
            }
            res.depth.d[i] = acc / L;
            res.valid[i] = 1;
        }
    });
    return res;
}

// ---------------------------------------------------------------------------
// Depth gradient with respect to the raw channels
// ---------------------------------------------------------------------------

struct DepthJacobian {
    Tensor3<double> J; // (n_ch, nx, ny): d(depth)/d(i_ch)
    Mask valid;
};

// Analytic derivative of the unwrapped depth through the per-frequency
// arctangent estimates; the wrap counts are locally constant and contribute
// nothing. For channel k at frequency l:
//   dd/di_k = A_l * (u_l*beta_k - v_l*alpha_k) / (u_l^2 + v_l^2).
inline DepthJacobian grad_depth_wrt_raw(const RawFrames& frames, const CameraConfig& cfg) {
    frames.validate();
    cfg.validate();
    if (frames.nx() != cfg.nx || frames.ny() != cfg.ny ||
        frames.n_channels() != cfg.n_channels())
        throw ConfigError("grad_depth_wrt_raw: frames do not match the config");
    UnwrapConstants uc = make_unwrap_constants(cfg.omegas);

    DepthJacobian out;
    out.J = Tensor3<double>(frames.n_channels(), frames.nx(), frames.ny(),
                            std::numeric_limits<double>::quiet_NaN());
    out.valid = Mask(frames.nx(), frames.ny(), 1);

    for (int l = 0; l < cfg.n_freqs(); ++l) {
        detail::PhaseDesign pd = detail::phase_design(frames, l);
        const std::size_t plane = frames.data.plane_size();
        parallel_for(plane, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                double u = 0.0, v = 0.0;
                for (std::size_t k = 0; k < pd.ch.size(); ++k) {
                    double val = frames.data.plane(pd.ch[k])[i];
                    u += pd.alpha[k] * val;
                    v += pd.beta[k] * val;
                }
                double a2 = u * u + v * v;
                if (!(a2 > 1e-300) || !std::isfinite(a2)) {
                    out.valid[i] = 0;
                    continue;
                }
                for (std::size_t k = 0; k < pd.ch.size(); ++k)
                    out.J.plane(pd.ch[k])[i] = uc.A[l] * (u * pd.beta[k] - v * pd.alpha[k]) / a2;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reliability mask, bilateral filter
// ---------------------------------------------------------------------------

struct MaskThresholds {
    double amplitude_frac = 0.01; // of the scene median (min-over-frequency) amplitude
    double consistency_m = 0.1;   // max pairwise per-frequency depth disagreement
};

// Rejects pixels whose weakest per-frequency amplitude falls under the
// scene-relative threshold or whose unwrapped per-frequency depths disagree.
inline Mask mask_unreliable(const RawFrames& frames,
                            const std::vector<Grid2<double>>& per_freq_depth,
                            const MaskThresholds& thr = {}) {
    frames.validate();
    int n_freq = 0;
    for (int f : frames.channel_freq) n_freq = std::max(n_freq, f + 1);
    if (static_cast<int>(per_freq_depth.size()) != n_freq)
        throw ConfigError("mask_unreliable: per-frequency depth count mismatch");

    const int nx = frames.nx(), ny = frames.ny();
    Grid2<double> min_amp(nx, ny, std::numeric_limits<double>::infinity());
    Mask valid(nx, ny, 1);
    for (int l = 0; l < n_freq; ++l) {
        PhaseEstimate pe = estimate_phase(frames, l);
        for (std::size_t i = 0; i < min_amp.size(); ++i) {
            min_amp[i] = std::min(min_amp[i], pe.amplitude[i]);
            if (!pe.valid[i]) valid[i] = 0;
        }
    }

    std::vector<double> amps;
    amps.reserve(min_amp.size());
    for (double a : min_amp)
        if (std::isfinite(a)) amps.push_back(a);
    double med = 0.0;
    if (!amps.empty()) {
        std::sort(amps.begin(), amps.end());
        double h = (amps.size() - 1) * 0.5;
        auto i0 = static_cast<std::size_t>(h);
        std::size_t i1 = std::min(i0 + 1, amps.size() - 1);
        med = amps[i0] + (h - i0) * (amps[i1] - amps[i0]);
    }
    const double amp_thr = thr.amplitude_frac * med;

    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (!valid[i]) continue;
        if (!(min_amp[i] >= amp_thr)) {
            valid[i] = 0;
            continue;
        }
        double dmin = std::numeric_limits<double>::infinity();
        double dmax = -dmin;
        bool finite = true;
        for (int l = 0; l < n_freq; ++l) {
            double d = per_freq_depth[l][i];
            if (!std::isfinite(d)) {
                finite = false;
                break;
            }
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        if (!finite || dmax - dmin > thr.consistency_m) valid[i] = 0;
    }
    return valid;
}

// Edge-preserving smoothing of the depth map: Gaussian spatial weights over a
// ceil(3*sigma_spatial) window times Gaussian weights on the depth
// difference. Invalid pixels are excluded from every support; an invalid
// center passes through unchanged. When the depth map carries an amplitude
// image it weights each neighbor as a confidence factor (constant amplitude
// and sigma_range = inf reduce to a plain Gaussian blur).
inline DepthMap bilateral_filter(const DepthMap& in, const Mask& valid, double sigma_spatial,
                                 double sigma_range) {
    if (!(sigma_spatial > 0.0) || !(sigma_range > 0.0))
        throw ConfigError("bilateral_filter: sigmas must be > 0");
    if (in.d.nx() != valid.nx() || in.d.ny() != valid.ny())
        throw ConfigError("bilateral_filter: mask dims mismatch");
    const bool use_amp = !in.amplitude.empty();

    const int r = static_cast<int>(std::ceil(3.0 * sigma_spatial));
    std::vector<double> gs(2 * r + 1);
    for (int t = -r; t <= r; ++t) gs[t + r] = std::exp(-0.5 * t * t / (sigma_spatial * sigma_spatial));

    DepthMap out = in;
    const int nx = in.d.nx(), ny = in.d.ny();
    parallel_for(static_cast<std::size_t>(nx), [&](std::size_t lo, std::size_t hi) {
        for (int x = static_cast<int>(lo); x < static_cast<int>(hi); ++x) {
            for (int y = 0; y < ny; ++y) {
                if (!valid(x, y)) continue;
                double dp = in.d(x, y);
                double wsum = 0.0, dsum = 0.0;
                for (int dx = -r; dx <= r; ++dx) {
                    int qx = x + dx;
                    if (qx < 0 || qx >= nx) continue;
                    for (int dy = -r; dy <= r; ++dy) {
                        int qy = y + dy;
                        if (qy < 0 || qy >= ny) continue;
                        if (!valid(qx, qy)) continue;
                        double dq = in.d(qx, qy);
                        double diff = dq - dp;
                        double w = gs[dx + r] * gs[dy + r] *
                                   std::exp(-0.5 * diff * diff / (sigma_range * sigma_range));
                        if (use_amp) w *= in.amplitude(qx, qy);
                        wsum += w;
                        dsum += w * dq;
                    }
                }
                if (wsum > 0.0) out.d(x, y) = dsum / wsum;
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Phasor reconstruction
// ---------------------------------------------------------------------------

struct PhasorResult {
    DepthMap depth;
    Mask valid;
};

// Beat-frequency reconstruction from two high modulation frequencies:
// d = c * wrap(phi_hi - phi_lo) / (2*(omega_hi - omega_lo)), shifted by whole
// beat periods to land inside [range_lo, range_lo + W) with beat width
// W = pi*c/|omega_1 - omega_2|. Pixels mapping above range_hi are marked
// invalid.
inline PhasorResult phasor_reconstruct(const RawFrames& frames, double range_lo,
                                       double range_hi) {
    frames.validate();
    int n_freq = 0;
    for (int f : frames.channel_freq) n_freq = std::max(n_freq, f + 1);
    if (n_freq != 2) throw ConfigError("phasor_reconstruct: exactly two frequencies required");
    if (!(range_hi > range_lo)) throw ConfigError("phasor_reconstruct: bad working range");

    PhaseEstimate p0 = estimate_phase(frames, 0);
    PhaseEstimate p1 = estimate_phase(frames, 1);
    const PhaseEstimate& hi_f = p0.omega >= p1.omega ? p0 : p1;
    const PhaseEstimate& lo_f = p0.omega >= p1.omega ? p1 : p0;
    double dw = hi_f.omega - lo_f.omega;
    if (!(dw > 0.0)) throw ConfigError("phasor_reconstruct: frequencies must differ");
    const double width = pi * speed_of_light / dw;
    if (range_hi - range_lo > width * (1.0 + 1e-9))
        throw ConfigError("phasor_reconstruct: working range exceeds the beat width");

    PhasorResult res;
    res.depth.d = Grid2<double>(frames.nx(), frames.ny(),
                                std::numeric_limits<double>::quiet_NaN());
    res.depth.amplitude = Grid2<double>(frames.nx(), frames.ny());
    res.valid = Mask(frames.nx(), frames.ny(), 0);

    for (std::size_t i = 0; i < res.depth.d.size(); ++i) {
        res.depth.amplitude[i] = std::min(p0.amplitude[i], p1.amplitude[i]);
        if (!p0.valid[i] || !p1.valid[i]) continue;
        double beat = wrap_two_pi(hi_f.phase[i] - lo_f.phase[i]);
        double d = speed_of_light * beat / (2.0 * dw); // in [0, width)
        d = range_lo + std::fmod(d - range_lo, width);
        if (d < range_lo) d += width;
        res.depth.d[i] = d;
        if (d <= range_hi) res.valid[i] = 1;
    }
    return res;
}

// ---------------------------------------------------------------------------
// One-bounce manifold projection
// ---------------------------------------------------------------------------

struct OneBounceFit {
    double a = 0.0;
    double tau = 0.0;      // seconds (half travel time)
    double residual = 0.0; // Euclidean norm of i - a*f(tau)
    bool converged = false;
    std::vector<double> projected;
};

namespace detail {

struct ManifoldTable {
    std::vector<double> f;     // (n_grid x n_ch) camera-function samples
    std::vector<double> inv_n2; // 1/||f(tau_k)||^2
    int n_grid = 0;
    double step = 0.0;
};

inline ManifoldTable manifold_table(const std::vector<CameraFunction>& channels,
                                    double tau_max, double step) {
    ManifoldTable t;
    t.step = step;
    t.n_grid = std::max(1, static_cast<int>(std::floor(tau_max / step)));
    const int n_ch = static_cast<int>(channels.size());
    t.f.resize(static_cast<std::size_t>(t.n_grid) * n_ch);
    t.inv_n2.resize(t.n_grid);
    for (int k = 0; k < t.n_grid; ++k) {
        double n2 = 0.0;
        for (int j = 0; j < n_ch; ++j) {
            double v = eval_camera_function(channels[j], k * step);
            t.f[static_cast<std::size_t>(k) * n_ch + j] = v;
            n2 += v * v;
        }
        t.inv_n2[k] = n2 > 0.0 ? 1.0 / n2 : 0.0;
    }
    return t;
}

inline OneBounceFit project_one_bounce_impl(const double* iv, int n_ch,
                                            const std::vector<CameraFunction>& channels,
                                            double tau_max, const ManifoldTable& t) {
    // Coarse grid: the optimal amplitude for fixed tau is <i, f>/||f||^2, so
    // the objective reduces to maximizing <i, f>^2/||f||^2.
    double best = -1.0;
    int best_k = 0;
    for (int k = 0; k < t.n_grid; ++k) {
        const double* f = t.f.data() + static_cast<std::size_t>(k) * n_ch;
        double dot = 0.0;
        for (int j = 0; j < n_ch; ++j) dot += iv[j] * f[j];
        double score = dot * dot * t.inv_n2[k];
        if (score > best) {
            best = score;
            best_k = k;
        }
    }

    double tau = best_k * t.step;
    {
        const double* f = t.f.data() + static_cast<std::size_t>(best_k) * n_ch;
        double dot = 0.0;
        for (int j = 0; j < n_ch; ++j) dot += iv[j] * f[j];
        OneBounceFit fit;
        fit.a = dot * t.inv_n2[best_k];
        fit.tau = tau;
        fit.converged = false;

        // Damped Gauss-Newton refinement of (a, tau).
        double a = fit.a;
        double lambda = 1e-6;
        bool met_tol = false;
        auto cost_of = [&](double aa, double tt) {
            double s = 0.0;
            for (int j = 0; j < n_ch; ++j) {
                double r = iv[j] - aa * eval_camera_function(channels[j], tt);
                s += r * r;
            }
            return s;
        };
        double cost = cost_of(a, tau);
        for (int it = 0; it < 60 && !met_tol; ++it) {
            double h00 = 0, h01 = 0, h11 = 0, g0 = 0, g1 = 0;
            for (int j = 0; j < n_ch; ++j) {
                double fj = eval_camera_function(channels[j], tau);
                double fpj = eval_camera_function_dtau(channels[j], tau);
                double r = iv[j] - a * fj;
                // d r / d a = -f, d r / d tau = -a f'
                h00 += fj * fj;
                h01 += fj * a * fpj;
                h11 += a * a * fpj * fpj;
                g0 += fj * r;
                g1 += a * fpj * r;
            }
            bool stepped = false;
            for (int tries = 0; tries < 20; ++tries) {
                double d00 = h00 * (1 + lambda) + 1e-30;
                double d11 = h11 * (1 + lambda) + 1e-30;
                double det = d00 * d11 - h01 * h01;
                if (std::abs(det) < 1e-300) {
                    lambda *= 10;
                    continue;
                }
                double da = (d11 * g0 - h01 * g1) / det;
                double dt = (-h01 * g0 + d00 * g1) / det;
                double a2 = a + da;
                double t2 = std::clamp(tau + dt, 0.0, tau_max);
                double c2 = cost_of(a2, t2);
                if (c2 <= cost) {
                    double rel = (std::abs(da) + std::abs(dt) * 1e9) /
                                 (std::abs(a) + std::abs(tau) * 1e9 + 1e-30);
                    a = a2;
                    tau = t2;
                    cost = c2;
                    lambda = std::max(lambda / 4.0, 1e-12);
                    stepped = true;
                    if (rel < 1e-12) met_tol = true;
                    break;
                }
                lambda *= 10;
            }
            if (!stepped) break;
        }
        fit.a = a;
        fit.tau = tau;
        fit.converged = met_tol;
        fit.residual = std::sqrt(cost_of(a, tau));
        fit.projected.resize(n_ch);
        for (int j = 0; j < n_ch; ++j)
            fit.projected[j] = a * eval_camera_function(channels[j], tau);
        return fit;
    }
}

} // namespace detail

// Projects one channel vector onto the one-bounce measurement manifold
// {a * f(tau)}: coarse grid over tau (default step 5e-11 s, range the
// multi-frequency unambiguous range) followed by damped Gauss-Newton
// refinement of (a, tau).
inline OneBounceFit project_one_bounce(const std::vector<double>& iv, const CameraConfig& cfg,
                                       double tau_max = 0.0, double grid_step = 5e-11) {
    cfg.validate();
    if (static_cast<int>(iv.size()) != cfg.n_channels())
        throw ConfigError("project_one_bounce: channel count mismatch");
    double n2 = 0.0;
    for (double v : iv) n2 += v * v;
    if (!(n2 > 0.0)) throw ConfigError("project_one_bounce: zero channel vector");
    if (tau_max <= 0.0) tau_max = pi / make_unwrap_constants(cfg.omegas).omega_g;

    detail::ManifoldTable t = detail::manifold_table(cfg.channels, tau_max, grid_step);
    return detail::project_one_bounce_impl(iv.data(), cfg.n_channels(), cfg.channels, tau_max,
                                           t);
}

struct ProjectedFrames {
    RawFrames frames;        // per-pixel projected channel vectors
    Grid2<double> a;         // fitted amplitude
    Grid2<double> tau;       // fitted half travel time
    Grid2<double> residual;  // per-pixel projection distance
    Mask valid;              // zero-vector pixels are invalid and left at 0
};

// Per-pixel manifold projection of a full frame stack.
inline ProjectedFrames project_frames(const RawFrames& frames, const CameraConfig& cfg,
                                      double tau_max = 0.0, double grid_step = 5e-11) {
    frames.validate();
    cfg.validate();
    if (frames.n_channels() != cfg.n_channels() || frames.nx() != cfg.nx ||
        frames.ny() != cfg.ny)
        throw ConfigError("project_frames: frames do not match the config");
    if (tau_max <= 0.0) tau_max = pi / make_unwrap_constants(cfg.omegas).omega_g;
    detail::ManifoldTable t = detail::manifold_table(cfg.channels, tau_max, grid_step);

    ProjectedFrames out;
    out.frames = frames;
    out.a = Grid2<double>(frames.nx(), frames.ny());
    out.tau = Grid2<double>(frames.nx(), frames.ny());
    out.residual = Grid2<double>(frames.nx(), frames.ny());
    out.valid = Mask(frames.nx(), frames.ny(), 1);

    const int n_ch = frames.n_channels();
    const std::size_t plane = frames.data.plane_size();
    parallel_for(plane, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> iv(n_ch);
        for (std::size_t i = lo; i < hi; ++i) {
            double n2 = 0.0;
            for (int j = 0; j < n_ch; ++j) {
                iv[j] = frames.data.plane(j)[i];
                n2 += iv[j] * iv[j];
            }
            if (!(n2 > 0.0)) {
                out.valid[i] = 0;
                for (int j = 0; j < n_ch; ++j) out.frames.data.plane(j)[i] = 0.0;
                continue;
            }
            OneBounceFit fit =
                detail::project_one_bounce_impl(iv.data(), n_ch, cfg.channels, tau_max, t);
            out.a[i] = fit.a;
            out.tau[i] = fit.tau;
            out.residual[i] = fit.residual;
            for (int j = 0; j < n_ch; ++j) out.frames.data.plane(j)[i] = fit.projected[j];
        }
    });
    return out;
}

} // namespace tof
