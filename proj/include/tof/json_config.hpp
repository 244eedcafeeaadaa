// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/tensor_io.hpp"

namespace tof {

namespace detail {

inline const nlohmann::json& require_key(const nlohmann::json& j, const std::string& key,
                                         const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(ctx + ": missing key '" + key + "'");
    return *it;
}

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key, const std::string& ctx) {
    try {
        return require_key(j, key, ctx).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(ctx + ": bad value for key '" + key + "'");
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback,
         const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    return get_as<T>(j, key, ctx);
}

} // namespace detail

// Camera configuration schema:
//   {
//     "nx": 64, "ny": 64,
//     "hfov_deg": 70.0,          optional, default 70
//     "exposure_s": 1.0,         optional, default 1
//     "frequencies_hz": [8e7, 1.6e7, 1.2e8],
//     "phases_per_freq": 3,      uniform layout: psi_k = 2*pi*k/K per frequency
//     "b": 1.0,                  channel gain for the uniform layout
//     "kind": "sinusoid",        or "clipped" (uses "b1" and "b2")
//     "phases": [[...], ...]     optional explicit per-frequency phase lists;
//                                overrides "phases_per_freq"
//   }
inline CameraConfig camera_from_json(const nlohmann::json& j) {
    const std::string ctx = "camera config";
    if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");

    const int nx = detail::get_as<int>(j, "nx", ctx);
    const int ny = detail::get_as<int>(j, "ny", ctx);
    const auto freqs = detail::get_as<std::vector<double>>(j, "frequencies_hz", ctx);
    if (freqs.empty()) throw ConfigError(ctx + ": frequencies_hz must be non-empty");
    const double hfov = detail::get_or<double>(j, "hfov_deg", 70.0, ctx);
    const double exposure = detail::get_or<double>(j, "exposure_s", 1.0, ctx);
    const std::string kind = detail::get_or<std::string>(j, "kind", "sinusoid", ctx);

    std::vector<std::vector<double>> phases;
    if (j.contains("phases")) {
        try {
            phases = j["phases"].get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(ctx + ": bad value for key 'phases'");
        }
        if (phases.size() != freqs.size())
            throw ConfigError(ctx + ": phases must list one entry per frequency");
    } else {
        const int k = detail::get_as<int>(j, "phases_per_freq", ctx);
        if (k < 2) throw ConfigError(ctx + ": phases_per_freq must be >= 2");
        for (std::size_t l = 0; l < freqs.size(); ++l) {
            std::vector<double> ps(k);
            for (int i = 0; i < k; ++i) ps[i] = two_pi * i / k;
            phases.push_back(std::move(ps));
        }
    }

    CameraConfig cfg;
    cfg.nx = nx;
    cfg.ny = ny;
    cfg.hfov_deg = hfov;
    cfg.exposure_s = exposure;
    for (std::size_t l = 0; l < freqs.size(); ++l) {
        if (!(freqs[l] > 0.0)) throw ConfigError(ctx + ": frequencies must be > 0");
        cfg.omegas.push_back(two_pi * freqs[l]);
        for (double psi : phases[l]) {
            CameraFunction f;
            if (kind == "sinusoid") {
                f = make_sinusoid(detail::get_or<double>(j, "b", 1.0, ctx), psi,
                                  cfg.omegas.back());
            } else if (kind == "clipped") {
                f = make_clipped(detail::get_as<double>(j, "b1", ctx),
                                 detail::get_as<double>(j, "b2", ctx), psi,
                                 cfg.omegas.back());
            } else {
                throw ConfigError(ctx + ": unknown camera function kind '" + kind + "'");
            }
            cfg.channels.push_back(f);
            cfg.channel_freq.push_back(static_cast<int>(l));
        }
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json camera_to_json(const CameraConfig& cfg) {
    nlohmann::json j;
    j["nx"] = cfg.nx;
    j["ny"] = cfg.ny;
    j["hfov_deg"] = cfg.hfov_deg;
    j["exposure_s"] = cfg.exposure_s;
    std::vector<double> freqs;
    std::vector<std::vector<double>> phases(cfg.n_freqs());
    for (int l = 0; l < cfg.n_freqs(); ++l) {
        freqs.push_back(cfg.omegas[l] / two_pi);
        for (int ch : cfg.channels_of(l)) phases[l].push_back(cfg.channels[ch].psi);
    }
    j["frequencies_hz"] = freqs;
    j["phases"] = phases;
    const CameraFunction& f0 = cfg.channels.at(0);
    if (f0.kind == CameraKind::Sinusoid) {
        j["kind"] = "sinusoid";
        j["b"] = f0.b;
    } else {
        j["kind"] = "clipped";
        j["b1"] = f0.b1;
        j["b2"] = f0.b2;
    }
    return j;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
}

} // namespace tof
