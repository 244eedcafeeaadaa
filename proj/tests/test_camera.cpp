// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors

#include <catch_amalgamated.hpp>

#include "tof/tof.hpp"

using Catch::Approx;
using namespace tof;

TEST_CASE("sinusoid evaluation hits the closed-form values") {
    double omega = two_pi * 4e7;
    CameraFunction f = make_sinusoid(1.0, 0.0, omega);
    CHECK(eval_camera_function(f, 0.0) == Approx(1.0).margin(1e-15));

    // psi = pi/2 and 2*omega*tau = pi/2 line up the argument at zero.
    CameraFunction g = make_sinusoid(2.0, pi / 2.0, omega);
    double tau = (pi / 2.0) / (2.0 * omega);
    CHECK(eval_camera_function(g, tau) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("clipped sinusoid clamps at the clip level") {
    double omega = two_pi * 4e7;
    CameraFunction f = make_clipped(2.0, 1.0, 0.0, omega);
    CHECK(eval_camera_function(f, 0.0) == Approx(1.0).margin(1e-15));

    // Far from the plateau the clipped kind tracks the plain sinusoid.
    double tau = (pi / 2.0) / (2.0 * omega); // argument -pi/2, raw value 0
    CHECK(eval_camera_function(f, tau) == Approx(0.0).margin(1e-12));
    for (double t : {1e-10, 3e-10, 7.7e-10, 2.5e-9}) {
        double raw = 2.0 * std::cos(-2.0 * omega * t);
        CHECK(eval_camera_function(f, t) == Approx(std::clamp(raw, -1.0, 1.0)).margin(1e-12));
    }
}

TEST_CASE("camera functions are periodic with period pi/omega in tau") {
    double omega = two_pi * 3.7e7;
    CameraFunction s = make_sinusoid(1.3, 0.9, omega);
    CameraFunction c = make_clipped(2.0, 1.1, 2.2, omega);
    double period = pi / omega;
    for (int i = 0; i < 50; ++i) {
        double tau = 1e-10 + i * 3.1e-10;
        CHECK(eval_camera_function(s, tau + period) ==
              Approx(eval_camera_function(s, tau)).margin(1e-12));
        CHECK(eval_camera_function(c, tau + period) ==
              Approx(eval_camera_function(c, tau)).margin(1e-12));
    }
}

TEST_CASE("tau derivative matches finite differences away from the plateaus") {
    double omega = two_pi * 5e7;
    CameraFunction s = make_sinusoid(1.5, 0.7, omega);
    CameraFunction c = make_clipped(2.0, 1.0, 0.7, omega);
    double h = 1e-15;
    for (double tau : {3e-10, 9e-10, 1.7e-9}) {
        double fd = (eval_camera_function(s, tau + h) - eval_camera_function(s, tau - h)) / (2 * h);
        CHECK(eval_camera_function_dtau(s, tau) == Approx(fd).epsilon(1e-4));
        double raw = 2.0 * std::cos(0.7 - 2.0 * omega * tau);
        if (std::abs(std::abs(raw) - 1.0) > 0.1) {
            double fdc =
                (eval_camera_function(c, tau + h) - eval_camera_function(c, tau - h)) / (2 * h);
            CHECK(eval_camera_function_dtau(c, tau) == Approx(fdc).margin(1e5));
        }
    }
    // On a plateau the derivative is exactly zero.
    CHECK(eval_camera_function_dtau(c, 0.0) == 0.0);
}

TEST_CASE("camera function validation rejects bad parameters") {
    CHECK_THROWS_AS(make_sinusoid(0.0, 0.0, two_pi * 4e7), ConfigError);
    CHECK_THROWS_AS(make_sinusoid(-1.0, 0.0, two_pi * 4e7), ConfigError);
    CHECK_THROWS_AS(make_sinusoid(1.0, 0.0, 0.0), ConfigError);
    CHECK_THROWS_AS(make_clipped(1.0, 0.0, 0.0, two_pi * 4e7), ConfigError);
    CHECK_THROWS_AS(make_clipped(0.0, 1.0, 0.0, two_pi * 4e7), ConfigError);
    // psi is wrapped into [0, 2*pi) by the factory.
    CameraFunction f = make_sinusoid(1.0, -pi / 2.0, two_pi * 4e7);
    CHECK(f.psi == Approx(3.0 * pi / 2.0));
}

TEST_CASE("uniform config lays out channels frequency-major") {
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 8, 8);
    REQUIRE(cfg.n_channels() == 6);
    REQUIRE(cfg.n_freqs() == 2);
    for (int l = 0; l < 2; ++l) {
        auto ch = cfg.channels_of(l);
        REQUIRE(ch.size() == 3);
        for (int k = 0; k < 3; ++k) {
            CHECK(cfg.channels[ch[k]].psi == Approx(two_pi * k / 3.0).margin(1e-15));
            CHECK(cfg.channels[ch[k]].omega == Approx(two_pi * (l == 0 ? 4e7 : 5e7)));
        }
    }
    CHECK(cfg.frequency_hz(0) == Approx(4e7));
    CHECK_THROWS_AS(make_uniform_config({4e7}, 1, 1.0, 8, 8), ConfigError);
}

TEST_CASE("config validation enforces channel/frequency consistency") {
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 8, 8);
    CameraConfig broken = cfg;
    broken.channel_freq[0] = 1; // channel omega no longer matches its frequency
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = cfg;
    broken.channel_freq.pop_back();
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = cfg;
    broken.omegas.clear();
    CHECK_THROWS_AS(broken.validate(), ConfigError);
}

TEST_CASE("pixel rays are unit length and pass through the pinhole model") {
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.0, 5, 5, 70.0);
    Ray3 center = pixel_ray(cfg, 2, 2);
    CHECK(center.X == Approx(0.0).margin(1e-15));
    CHECK(center.Y == Approx(0.0).margin(1e-15));
    CHECK(center.Z == Approx(1.0).margin(1e-15));

    for (int x = 0; x < 5; ++x)
        for (int y = 0; y < 5; ++y) {
            Ray3 r = pixel_ray(cfg, x, y);
            CHECK(r.X * r.X + r.Y * r.Y + r.Z * r.Z == Approx(1.0).epsilon(1e-12));
        }

    // The horizontal field of view spans the y (column) axis: the ray of the
    // outermost column reaches tan(hfov/2) of the optical axis at the sensor
    // edge midpoint offset.
    Ray3 edge = pixel_ray(cfg, 2, 4);
    double expected = ((4 - 2.0) / cfg.focal_px());
    CHECK(edge.X / edge.Z == Approx(expected).epsilon(1e-12));
    CHECK(edge.Y == Approx(0.0).margin(1e-15));
    // Full half-span at y = ny/2 offset equals tan(hfov/2) by construction.
    CHECK((cfg.ny / 2.0) / cfg.focal_px() == Approx(std::tan(deg2rad(70.0) / 2.0)));
}
