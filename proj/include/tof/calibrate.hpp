// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "tof/camera.hpp"
#include "tof/common.hpp"

namespace tof {

struct CalibrationFit {
    CameraFunction f;
    double residual = 0.0; // sum of squared residuals on decay-removed values
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Solves A x = b for small N by Gaussian elimination with partial pivoting.
// Returns false on a (near-)singular system.
template <int N>
bool solve_small(std::array<std::array<double, N>, N> A, std::array<double, N> b,
                 std::array<double, N>& x) {
    for (int col = 0; col < N; ++col) {
        int piv = col;
        for (int r = col + 1; r < N; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (std::abs(A[piv][col]) < 1e-300) return false;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (int r = col + 1; r < N; ++r) {
            double m = A[r][col] / A[col][col];
            for (int c = col; c < N; ++c) A[r][c] -= m * A[col][c];
            b[r] -= m * b[col];
        }
    }
    for (int r = N - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < N; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return true;
}

template <int NP>
struct Descent {
    std::array<double, NP> theta{};
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

// One damped Gauss-Newton descent on cost(theta) = sum_j (y_j - model(tau_j))^2.
// Iteration cap 200; converged when the relative parameter step drops below
// 1e-10.
template <int NP, typename Model, typename Jac>
Descent<NP> lm_descend(const std::vector<double>& tau, const std::vector<double>& y,
                       std::array<double, NP> theta, Model&& model, Jac&& jac) {
    const int n = static_cast<int>(tau.size());
    auto cost_of = [&](const std::array<double, NP>& th) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            double r = y[j] - model(tau[j], th);
            s += r * r;
        }
        return s;
    };

    double lambda = 1e-3;
    double cost = cost_of(theta);
    Descent<NP> out;

    int it = 0;
    for (; it < 200; ++it) {
        std::array<std::array<double, NP>, NP> JtJ{};
        std::array<double, NP> Jtr{};
        for (int j = 0; j < n; ++j) {
            std::array<double, NP> g = jac(tau[j], theta);
            double r = y[j] - model(tau[j], theta);
            for (int a = 0; a < NP; ++a) {
                Jtr[a] += g[a] * r;
                for (int b = 0; b < NP; ++b) JtJ[a][b] += g[a] * g[b];
            }
        }

        bool accepted = false;
        double step_norm = 0.0;
        for (int tries = 0; tries < 25; ++tries) {
            auto A = JtJ;
            for (int a = 0; a < NP; ++a)
                A[a][a] += lambda * std::max(JtJ[a][a], 1e-12);
            std::array<double, NP> delta{};
            if (!solve_small<NP>(A, Jtr, delta)) {
                lambda *= 4.0;
                continue;
            }
            auto cand = theta;
            for (int a = 0; a < NP; ++a) cand[a] += delta[a];
            double c2 = cost_of(cand);
            if (c2 <= cost) {
                double tn = 0.0, pn = 0.0;
                for (int a = 0; a < NP; ++a) {
                    tn += delta[a] * delta[a];
                    pn += theta[a] * theta[a];
                }
                step_norm = std::sqrt(tn) / (std::sqrt(pn) + 1e-30);
                theta = cand;
                cost = c2;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) break; // damping saturated; theta is the local best
        if (step_norm < 1e-10) {
            out.converged = true;
            ++it;
            break;
        }
    }

    out.theta = theta;
    out.iterations = it;
    out.residual = cost;
    return out;
}

} // namespace detail

// Fits camera-function parameters from plane measurements (d_j, i_j) taken at
// known distances. The squared-distance intensity decay is removed first
// (y_j = d_j^2 * i_j), then f(tau_j) with tau_j = d_j/c is fitted to y_j by
// damped Gauss-Newton with multi-start over psi (and over b2 for the clipped
// kind, whose clamp plateaus create local minima).
inline CalibrationFit fit_camera_function(const std::vector<std::pair<double, double>>& samples,
                                          CameraKind kind, double omega) {
    const int need = kind == CameraKind::Sinusoid ? 2 : 3;
    if (static_cast<int>(samples.size()) < need)
        throw ConfigError("fit_camera_function: underdetermined sample set");
    if (!(omega > 0.0)) throw ConfigError("fit_camera_function: omega must be > 0");

    std::vector<double> tau(samples.size()), y(samples.size()), dsort;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        double d = samples[j].first;
        if (!(d > 0.0)) throw ConfigError("fit_camera_function: distances must be > 0");
        tau[j] = d / speed_of_light;
        y[j] = d * d * samples[j].second;
        dsort.push_back(d);
    }
    std::sort(dsort.begin(), dsort.end());
    if (std::adjacent_find(dsort.begin(), dsort.end()) != dsort.end())
        throw ConfigError("fit_camera_function: distances must be distinct");

    double ymax = 0.0;
    for (double v : y) ymax = std::max(ymax, std::abs(v));
    if (ymax == 0.0) ymax = 1.0;

    const std::array<double, 4> psi_starts = {0.0, pi / 2.0, pi, 3.0 * pi / 2.0};
    CalibrationFit best;
    bool have = false;

    if (kind == CameraKind::Sinusoid) {
        auto model = [omega](double t, const std::array<double, 2>& th) {
            return th[0] * std::cos(th[1] - 2.0 * omega * t);
        };
        auto jac = [omega](double t, const std::array<double, 2>& th) {
            double arg = th[1] - 2.0 * omega * t;
            return std::array<double, 2>{std::cos(arg), -th[0] * std::sin(arg)};
        };

        // Extra start from the linear least-squares solution in
        // (b cos psi, b sin psi); exact for this kind, so the descent only
        // polishes it.
        std::array<std::array<double, 2>, 2> N{};
        std::array<double, 2> rhs{};
        for (std::size_t j = 0; j < tau.size(); ++j) {
            double cj = std::cos(2.0 * omega * tau[j]);
            double sj = std::sin(2.0 * omega * tau[j]);
            N[0][0] += cj * cj;
            N[0][1] += cj * sj;
            N[1][1] += sj * sj;
            rhs[0] += cj * y[j];
            rhs[1] += sj * y[j];
        }
        N[1][0] = N[0][1];
        std::array<double, 2> uv{};
        std::vector<std::array<double, 2>> starts;
        if (detail::solve_small<2>(N, rhs, uv)) {
            double b0 = std::hypot(uv[0], uv[1]);
            if (b0 > 1e-12 * ymax)
                starts.push_back({b0, wrap_two_pi(std::atan2(uv[1], uv[0]))});
        }
        for (double p0 : psi_starts) starts.push_back({ymax, p0});

        detail::Descent<2> win;
        for (auto& s : starts) {
            auto fit = detail::lm_descend<2>(tau, y, s, model, jac);
            if (!have || fit.residual < win.residual) {
                win = fit;
                have = true;
            }
        }
        double b = win.theta[0];
        double psi = win.theta[1];
        if (b < 0.0) {
            b = -b;
            psi += pi;
        }
        best.f.kind = CameraKind::Sinusoid;
        best.f.b = b;
        best.f.psi = wrap_two_pi(psi);
        best.f.omega = omega;
        best.residual = win.residual;
        best.iterations = win.iterations;
        best.converged = win.converged;
        return best;
    }

    auto model = [omega](double t, const std::array<double, 3>& th) {
        double v = th[0] * std::cos(th[2] - 2.0 * omega * t);
        double lim = std::abs(th[1]);
        return std::clamp(v, -lim, lim);
    };
    auto jac = [omega](double t, const std::array<double, 3>& th) {
        double arg = th[2] - 2.0 * omega * t;
        double raw = th[0] * std::cos(arg);
        double lim = std::abs(th[1]);
        if (raw > lim) return std::array<double, 3>{0.0, 1.0, 0.0};
        if (raw < -lim) return std::array<double, 3>{0.0, -1.0, 0.0};
        return std::array<double, 3>{std::cos(arg), 0.0, -th[0] * std::sin(arg)};
    };

    detail::Descent<3> win;
    for (double b2_frac : {0.5, 1.0}) {
        for (double p0 : psi_starts) {
            std::array<double, 3> s = {2.0 * b2_frac * ymax, b2_frac * ymax, p0};
            auto fit = detail::lm_descend<3>(tau, y, s, model, jac);
            if (!have || fit.residual < win.residual) {
                win = fit;
                have = true;
            }
        }
    }
    double b1 = win.theta[0], b2 = std::abs(win.theta[1]), psi = win.theta[2];
    if (b1 < 0.0) {
        b1 = -b1;
        psi += pi;
    }
    best.f.kind = CameraKind::ClippedSinusoid;
    best.f.b1 = b1;
    best.f.b2 = b2;
    best.f.psi = wrap_two_pi(psi);
    best.f.omega = omega;
    best.residual = win.residual;
    best.iterations = win.iterations;
    best.converged = win.converged;
    return best;
}

} // namespace tof
