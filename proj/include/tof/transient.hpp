// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <atomic>
#include <cmath>
#include <vector>

#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/grid.hpp"

namespace tof {

// Discretized transient a(tau, x, y): per-bin integrated return energy, with
// tau the half travel time of the path. Bin k covers tau = t0 + k*dtau.
struct SceneResponse {
    Tensor3<double> a; // (n_tau, nx, ny), sensor units per bin
    double dtau = 5e-11;
    double t0 = 0.0;

    int n_tau() const { return a.n0(); }
    int nx() const { return a.nx(); }
    int ny() const { return a.ny(); }

    void validate() const {
        if (a.n0() < 1 || a.nx() < 1 || a.ny() < 1)
            throw ConfigError("SceneResponse: all dimensions must be >= 1");
        if (!(dtau > 0.0)) throw ConfigError("SceneResponse: dtau must be > 0");
    }
};

// Depth representable on the time axis: nearest bin center, in meters.
inline double snap_depth_to_bin(double d, double dtau) {
    return std::round(d / (speed_of_light * dtau)) * speed_of_light * dtau;
}

// Ideal one-bounce scene: per pixel a single impulse at tau = d/c with energy
// albedo/d^2.
inline SceneResponse single_bounce_response(const Grid2<double>& depth,
                                            const Grid2<double>& albedo, int n_tau,
                                            double dtau) {
    if (!depth.same_shape(albedo))
        throw ConfigError("single_bounce_response: depth/albedo shape mismatch");
    if (n_tau < 1 || !(dtau > 0.0))
        throw ConfigError("single_bounce_response: invalid time axis");
    SceneResponse sr;
    sr.a = Tensor3<double>(n_tau, depth.nx(), depth.ny());
    sr.dtau = dtau;
    for (int x = 0; x < depth.nx(); ++x) {
        for (int y = 0; y < depth.ny(); ++y) {
            double d = depth(x, y);
            if (!(d > 0.0) || d >= speed_of_light * n_tau * dtau)
                throw ConfigError("single_bounce_response: depth out of representable range");
            auto k = static_cast<long>(std::lround(d / (speed_of_light * dtau)));
            if (k < 0 || k >= n_tau)
                throw ConfigError("single_bounce_response: depth out of representable range");
            sr.a(static_cast<int>(k), x, y) += albedo(x, y) / (d * d);
        }
    }
    return sr;
}

// Two Lambertian half-planes meeting at a vertical corner line at distance
// `distance` in front of the camera, opening toward it. Plane A occupies the
// negative horizontal half, plane B the positive one.
struct CornerScene {
    double angle = pi / 2.0; // dihedral angle between the planes, radians
    double albedo_a = 0.5;
    double albedo_b = 0.5;
    double distance = 3.0; // camera to corner line, meters
    int patches = 1024;    // indirect-gather patch budget per plane

    void validate() const {
        if (!(angle > 0.0 && angle < pi))
            throw ConfigError("CornerScene: angle must lie in (0, pi)");
        if (!(albedo_a >= 0.0 && albedo_a <= 1.0 && albedo_b >= 0.0 && albedo_b <= 1.0))
            throw ConfigError("CornerScene: albedo must lie in [0, 1]");
        if (!(distance > 0.0)) throw ConfigError("CornerScene: distance must be > 0");
        if (patches < 1) throw ConfigError("CornerScene: patches must be >= 1");
    }
};

namespace detail {

struct Vec3 {
    double x, y, z;
};
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

struct CornerHit {
    Vec3 p;      // hit point
    double r;    // range ||p||
    Vec3 n;      // surface normal (faces the camera side)
    int plane;   // 0 = A (negative horizontal half), 1 = B
};

// Intersects the pixel ray with the nearer corner plane. The wedge opens
// toward the camera, so every forward ray hits one of the half-planes.
inline CornerHit corner_intersect(const CornerScene& sc, const CameraConfig& cfg, int x,
                                  int y) {
    double h = sc.angle / 2.0;
    Vec3 nA = {std::cos(h), 0.0, -std::sin(h)};
    Vec3 nB = {-std::cos(h), 0.0, -std::sin(h)};
    Ray3 rv = pixel_ray(cfg, x, y);
    Vec3 v = {rv.X, rv.Y, rv.Z};
    double plane_off = -sc.distance * std::sin(h); // dot(n, p) on either plane

    double best = 0.0;
    int which = -1;
    for (int w = 0; w < 2; ++w) {
        const Vec3& n = w == 0 ? nA : nB;
        double den = dot(n, v);
        if (den >= -1e-15) continue; // ray parallel to or facing away from the plane
        double s = plane_off / den;
        if (s <= 0.0) continue;
        double hx = s * v.x;
        if (w == 0 ? hx > 1e-9 * s : hx < -1e-9 * s) continue; // wrong half
        if (which < 0 || s < best) {
            best = s;
            which = w;
        }
    }
    if (which < 0)
        throw NumericalError("corner scene: pixel ray misses both planes (degenerate geometry)");
    Vec3 p = {best * v.x, best * v.y, best * v.z};
    return {p, norm(p), which == 0 ? nA : nB, which};
}

struct WallPatches {
    std::vector<Vec3> q;
    std::vector<double> q_norm;
    std::vector<double> cos_src; // incidence cosine of the co-located source at q
    Vec3 normal;
    double area; // per patch
};

inline WallPatches corner_patches(const CornerScene& sc, const CameraConfig& cfg, int plane) {
    double h = sc.angle / 2.0;
    double sign = plane == 0 ? -1.0 : 1.0;
    Vec3 n = {-sign * std::cos(h), 0.0, -std::sin(h)};

    int grid = std::max(1, static_cast<int>(std::lround(std::sqrt(double(sc.patches)))));
    double extent = 1.6 * sc.distance * std::tan(deg2rad(cfg.hfov_deg) / 2.0);

    WallPatches wp;
    wp.normal = n;
    wp.area = (extent / grid) * (2.0 * extent / grid);
    wp.q.reserve(static_cast<std::size_t>(grid) * grid);
    for (int i = 0; i < grid; ++i) {
        double t = (i + 0.5) * extent / grid; // distance along the wall from the corner
        for (int j = 0; j < grid; ++j) {
            double yy = -extent + (j + 0.5) * 2.0 * extent / grid;
            Vec3 q = {sign * t * std::sin(h), yy, sc.distance - t * std::cos(h)};
            double qn = norm(q);
            Vec3 to_src = {-q.x / qn, -q.y / qn, -q.z / qn};
            wp.q.push_back(q);
            wp.q_norm.push_back(qn);
            wp.cos_src.push_back(std::max(0.0, dot(n, to_src)));
        }
    }
    return wp;
}

} // namespace detail

// Range along each pixel ray to the nearer corner plane (the scene's
// ground-truth depth in the library's range-along-ray convention).
inline Grid2<double> corner_direct_depth(const CornerScene& scene, const CameraConfig& cfg) {
    scene.validate();
    Grid2<double> d(cfg.nx, cfg.ny);
    for (int x = 0; x < cfg.nx; ++x)
        for (int y = 0; y < cfg.ny; ++y) d(x, y) = detail::corner_intersect(scene, cfg, x, y).r;
    return d;
}

// Optional per-pixel diagnostics of the corner generator.
struct CornerDetail {
    Grid2<double> direct_depth;
    Grid2<double> direct_energy;
    Grid2<double> indirect_energy;
};

// Transient of the corner scene: per pixel, a direct impulse at tau = r/c
// with energy albedo/r^2, plus one indirect bounce gathered over the opposing
// plane's patches (Lambertian, cosine-weighted, squared-distance falloff).
// Indirect arrivals are binned at tau = (total path length)/(2c), rounded to
// the nearest bin. Emitter and sensor are co-located at the pinhole.
inline SceneResponse corner_two_bounce_response(const CornerScene& scene,
                                                const CameraConfig& cfg, int n_tau = 1024,
                                                double dtau = 5e-11,
                                                CornerDetail* detail_out = nullptr) {
    scene.validate();
    if (n_tau < 1 || !(dtau > 0.0))
        throw ConfigError("corner_two_bounce_response: invalid time axis");

    SceneResponse sr;
    sr.a = Tensor3<double>(n_tau, cfg.nx, cfg.ny);
    sr.dtau = dtau;
    if (detail_out) {
        detail_out->direct_depth = Grid2<double>(cfg.nx, cfg.ny);
        detail_out->direct_energy = Grid2<double>(cfg.nx, cfg.ny);
        detail_out->indirect_energy = Grid2<double>(cfg.nx, cfg.ny);
    }

    const detail::WallPatches walls[2] = {detail::corner_patches(scene, cfg, 0),
                                          detail::corner_patches(scene, cfg, 1)};
    const double rho[2] = {scene.albedo_a, scene.albedo_b};
    const std::size_t n_px = static_cast<std::size_t>(cfg.nx) * cfg.ny;

    std::atomic<bool> out_of_axis{false};
    parallel_for(n_px, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t px = lo; px < hi; ++px) {
            int x = static_cast<int>(px) / cfg.ny;
            int y = static_cast<int>(px) % cfg.ny;
            auto hit = detail::corner_intersect(scene, cfg, x, y);
            double rho_p = rho[hit.plane];
            double direct = rho_p / (hit.r * hit.r);

            auto kd = static_cast<long>(std::lround(hit.r / (speed_of_light * dtau)));
            if (kd < 0 || kd >= n_tau) {
                out_of_axis.store(true);
                continue;
            }
            sr.a(static_cast<int>(kd), x, y) += direct;

            double indirect_sum = 0.0;
            double rho_q = rho[1 - hit.plane];
            if (rho_p > 0.0 && rho_q > 0.0) {
                const detail::WallPatches& wall = walls[1 - hit.plane];
                detail::Vec3 to_src = {-hit.p.x / hit.r, -hit.p.y / hit.r, -hit.p.z / hit.r};
                double cos_p_src = std::max(0.0, detail::dot(hit.n, to_src));
                double e_dir = cos_p_src / (hit.r * hit.r);
                if (e_dir > 0.0) {
                    for (std::size_t qi = 0; qi < wall.q.size(); ++qi) {
                        if (wall.cos_src[qi] <= 0.0) continue;
                        detail::Vec3 pq = detail::sub(hit.p, wall.q[qi]);
                        double L = detail::norm(pq);
                        if (L <= 0.0) continue;
                        double cos_q_out = detail::dot(wall.normal, pq) / L;
                        double cos_p_in = -detail::dot(hit.n, pq) / L;
                        if (cos_q_out <= 0.0 || cos_p_in <= 0.0) continue;
                        double e_ind = rho_q / pi * wall.cos_src[qi] /
                                       (wall.q_norm[qi] * wall.q_norm[qi]) * cos_q_out *
                                       cos_p_in / (L * L) * wall.area;
                        double amp = direct * e_ind / e_dir;
                        double tau = (wall.q_norm[qi] + L + hit.r) / (2.0 * speed_of_light);
                        auto k = static_cast<long>(std::lround(tau / dtau));
                        if (k < 0 || k >= n_tau) {
                            out_of_axis.store(true);
                            continue;
                        }
                        sr.a(static_cast<int>(k), x, y) += amp;
                        indirect_sum += amp;
                    }
                }
            }
            if (detail_out) {
                detail_out->direct_depth(x, y) = hit.r;
                detail_out->direct_energy(x, y) = direct;
                detail_out->indirect_energy(x, y) = indirect_sum;
            }
        }
    });
    if (out_of_axis.load())
        throw ConfigError("corner_two_bounce_response: time axis too short for the geometry");
    return sr;
}

} // namespace tof
