// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors

#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "tof/tof.hpp"

using Catch::Approx;
using namespace tof;

TEST_CASE("single bounce puts the impulse on the expected bin") {
    double dtau = 5e-11;
    int n_tau = 512;
    double d = speed_of_light * dtau * 100.0;
    Grid2<double> depth(2, 2, d), albedo(2, 2, 1.0);
    SceneResponse sr = single_bounce_response(depth, albedo, n_tau, dtau);

    for (int k = 0; k < n_tau; ++k) {
        double expect = k == 100 ? 1.0 / (d * d) : 0.0;
        CHECK(sr.a(k, 0, 0) == Approx(expect).margin(1e-18));
    }
}

TEST_CASE("doubling the depth quarters the returned energy") {
    double dtau = 5e-11;
    double d = speed_of_light * dtau * 100.0;
    Grid2<double> d1(1, 1, d), d2(1, 1, 2.0 * d), albedo(1, 1, 1.0);
    SceneResponse a = single_bounce_response(d1, albedo, 512, dtau);
    SceneResponse b = single_bounce_response(d2, albedo, 512, dtau);
    double ea = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < a.a.size(); ++i) {
        ea += a.a[i];
        eb += b.a[i];
    }
    CHECK(eb / ea == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("out-of-range depths are rejected") {
    double dtau = 5e-11;
    int n_tau = 256;
    Grid2<double> albedo(1, 1, 1.0);
    Grid2<double> far(1, 1, speed_of_light * n_tau * dtau * 2.0);
    CHECK_THROWS_AS(single_bounce_response(far, albedo, n_tau, dtau), ConfigError);
    Grid2<double> zero(1, 1, 0.0);
    CHECK_THROWS_AS(single_bounce_response(zero, albedo, n_tau, dtau), ConfigError);
    Grid2<double> neg(1, 1, -1.0);
    CHECK_THROWS_AS(single_bounce_response(neg, albedo, n_tau, dtau), ConfigError);
    Grid2<double> ok(1, 1, 1.0);
    CHECK_THROWS_AS(single_bounce_response(ok, Grid2<double>(2, 2, 1.0), 256, dtau),
                    ConfigError);
}

TEST_CASE("snap_depth_to_bin lands depths on representable bin centers") {
    double dtau = 5e-11;
    double step = speed_of_light * dtau;
    CHECK(snap_depth_to_bin(3.0, dtau) == Approx(std::round(3.0 / step) * step));
    double snapped = snap_depth_to_bin(2.7182, dtau);
    CHECK(std::abs(snapped / step - std::round(snapped / step)) < 1e-9);
    CHECK(std::abs(snapped - 2.7182) <= step / 2.0 + 1e-12);
}

TEST_CASE("corner with a dark opposing plane reduces to the visible single bounce") {
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 8, 16, 70.0);
    CornerScene sc;
    sc.albedo_a = 0.7;
    sc.albedo_b = 0.0;
    sc.distance = 3.0;
    sc.patches = 256;
    SceneResponse corner = corner_two_bounce_response(sc, cfg, 1024, 5e-11);

    // With the opposing plane black, every pixel carries only its direct
    // impulse. Pixels looking at the black plane (positive ray X) return
    // nothing at all.
    Grid2<double> r = corner_direct_depth(sc, cfg);
    Grid2<double> albedo(cfg.nx, cfg.ny);
    for (int x = 0; x < cfg.nx; ++x)
        for (int y = 0; y < cfg.ny; ++y)
            albedo(x, y) = pixel_ray(cfg, x, y).X < 0.0 ? sc.albedo_a : 0.0;
    SceneResponse single = single_bounce_response(r, albedo, 1024, 5e-11);

    REQUIRE(corner.a.same_shape(single.a));
    for (std::size_t i = 0; i < corner.a.size(); ++i)
        CHECK(corner.a[i] == Approx(single.a[i]).margin(1e-15));
}

TEST_CASE("corner direct depth matches the closed-form wedge intersection") {
    // For a 90 degree concave corner with its fold line at distance D the two
    // planes satisfy z = D + x (x <= 0) and z = D - x (x >= 0); a ray with
    // direction (X, Y, Z) hits the half-plane on its own side, so the range
    // is D / (Z + |X|).
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 8, 16, 70.0);
    CornerScene sc;
    sc.distance = 3.0;
    Grid2<double> r = corner_direct_depth(sc, cfg);
    for (int x = 0; x < cfg.nx; ++x)
        for (int y = 0; y < cfg.ny; ++y) {
            Ray3 v = pixel_ray(cfg, x, y);
            double expect = sc.distance / (v.Z + std::abs(v.X));
            CHECK(r(x, y) == Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("corner transient starts at the direct bin and indirect arrives later") {
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 8, 16, 70.0);
    CornerScene sc;
    sc.distance = 3.0;
    sc.patches = 256;
    double dtau = 5e-11;
    CornerDetail det;
    SceneResponse sr = corner_two_bounce_response(sc, cfg, 1024, dtau, &det);

    for (int x = 0; x < cfg.nx; ++x)
        for (int y = 0; y < cfg.ny; ++y) {
            int first = -1;
            for (int k = 0; k < sr.n_tau(); ++k)
                if (sr.a(k, x, y) > 0.0) {
                    first = k;
                    break;
                }
            REQUIRE(first >= 0);
            Ray3 v = pixel_ray(cfg, x, y);
            double r = sc.distance / (v.Z + std::abs(v.X));
            auto kd = static_cast<int>(std::lround(r / (speed_of_light * dtau)));
            CHECK(first == kd);
            CHECK(det.direct_depth(x, y) == Approx(r).epsilon(1e-12));
        }
}

TEST_CASE("indirect energy is bounded by the albedo series") {
    // One gathered bounce of reflectance rho cannot exceed the geometric
    // series bound rho/(1-rho) times the direct return when rho <= 0.5.
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 16, 16, 70.0);
    CornerScene sc;
    sc.albedo_a = 0.5;
    sc.albedo_b = 0.5;
    sc.distance = 3.0;
    sc.patches = 1024;
    CornerDetail det;
    corner_two_bounce_response(sc, cfg, 1024, 5e-11, &det);

    double rho = 0.5;
    double bound = rho / (1.0 - rho);
    for (std::size_t i = 0; i < det.direct_energy.size(); ++i) {
        CHECK(det.indirect_energy[i] >= 0.0);
        CHECK(det.indirect_energy[i] <= bound * det.direct_energy[i]);
    }
}

TEST_CASE("indirect energy converges with the patch budget") {
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 12, 12, 70.0);
    auto total_indirect = [&](int patches) {
        CornerScene sc;
        sc.distance = 3.0;
        sc.patches = patches;
        CornerDetail det;
        corner_two_bounce_response(sc, cfg, 1024, 5e-11, &det);
        double e = 0.0;
        for (double v : det.indirect_energy) e += v;
        return e;
    };

    double e4096 = total_indirect(4096);
    double e2048 = total_indirect(2048);
    double e64 = total_indirect(64);
    REQUIRE(e4096 > 0.0);
    CHECK(std::abs(e2048 - e4096) / e4096 < 0.05);
    CHECK(std::abs(e64 - e4096) >= std::abs(e2048 - e4096));
}

TEST_CASE("corner scene validation") {
    CornerScene sc;
    sc.angle = 0.0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = {};
    sc.distance = -1.0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = {};
    sc.albedo_a = 1.5;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = {};
    sc.patches = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);

    // A time axis too short for the geometry is caught, not truncated.
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 4, 4, 70.0);
    CornerScene far;
    far.distance = 3.0;
    far.patches = 64;
    CHECK_THROWS_AS(corner_two_bounce_response(far, cfg, 16, 5e-11), ConfigError);
}
