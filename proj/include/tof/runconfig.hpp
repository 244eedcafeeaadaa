// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/json_config.hpp"
#include "tof/metrics.hpp"
#include "tof/motion.hpp"
#include "tof/pipeline.hpp"
#include "tof/rng.hpp"
#include "tof/simulate.hpp"
#include "tof/tensor_io.hpp"
#include "tof/transient.hpp"

namespace tof {

struct CommandResult {
    std::string out_dir;
    std::vector<std::string> outputs; // file names inside out_dir
};

namespace detail {

namespace fs = std::filesystem;

inline std::string resolve_path(const fs::path& base, const std::string& p) {
    fs::path pp(p);
    if (pp.is_absolute()) return pp.string();
    return (base / pp).string();
}

inline CameraConfig resolve_camera(const nlohmann::json& j, const fs::path& base) {
    const nlohmann::json& jc = require_key(j, "camera", "run config");
    if (jc.is_string())
        return camera_from_json(load_json_file(resolve_path(base, jc.get<std::string>())));
    return camera_from_json(jc);
}

// Scalar fields on the pixel grid: constant, two-level grating, linear ramp,
// or per-pixel uniform random values (counter RNG keyed by the field seed).
inline Grid2<double> build_field(const nlohmann::json& j, int nx, int ny,
                                 const std::string& ctx) {
    const std::string type = get_as<std::string>(j, "type", ctx);
    Grid2<double> g(nx, ny);
    if (type == "constant") {
        const double v = get_as<double>(j, "value", ctx);
        for (double& e : g) e = v;
    } else if (type == "grating") {
        const double lo = get_as<double>(j, "lo", ctx);
        const double hi = get_as<double>(j, "hi", ctx);
        const int bar = get_as<int>(j, "bar_px", ctx);
        if (bar < 1) throw ConfigError(ctx + ": bar_px must be >= 1");
        const std::string axis = get_or<std::string>(j, "axis", "y", ctx);
        if (axis != "x" && axis != "y") throw ConfigError(ctx + ": axis must be 'x' or 'y'");
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y)
                g(x, y) = ((axis == "y" ? y : x) / bar) % 2 == 0 ? lo : hi;
    } else if (type == "ramp") {
        const double lo = get_as<double>(j, "lo", ctx);
        const double hi = get_as<double>(j, "hi", ctx);
        const std::string axis = get_or<std::string>(j, "axis", "y", ctx);
        if (axis != "x" && axis != "y") throw ConfigError(ctx + ": axis must be 'x' or 'y'");
        const int n = axis == "y" ? ny : nx;
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y) {
                int c = axis == "y" ? y : x;
                g(x, y) = n > 1 ? lo + (hi - lo) * c / (n - 1) : lo;
            }
    } else if (type == "random") {
        const double lo = get_as<double>(j, "lo", ctx);
        const double hi = get_as<double>(j, "hi", ctx);
        const auto seed = get_or<std::uint64_t>(j, "seed", 0, ctx);
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y)
                g(x, y) = lo + (hi - lo) * counter_u01(seed, 0, x, y);
    } else {
        throw ConfigError(ctx + ": unknown field type '" + type + "'");
    }
    return g;
}

struct SceneBuild {
    SceneResponse response;
    Grid2<double> truth;
    bool has_truth = false;
};

inline SceneBuild build_scene(const nlohmann::json& js, const CameraConfig& cfg,
                              const fs::path& base) {
    const std::string ctx = "scene";
    const std::string type = get_as<std::string>(js, "type", ctx);
    SceneBuild sb;
    if (type == "single_bounce") {
        const int n_tau = get_or<int>(js, "n_tau", 1024, ctx);
        const double dtau = get_or<double>(js, "dtau", 5e-11, ctx);
        Grid2<double> depth = build_field(require_key(js, "depth", ctx), cfg.nx, cfg.ny,
                                          ctx + ".depth");
        Grid2<double> albedo(cfg.nx, cfg.ny, 1.0);
        if (js.contains("albedo"))
            albedo = build_field(js["albedo"], cfg.nx, cfg.ny, ctx + ".albedo");
        if (get_or<bool>(js, "snap_to_bins", true, ctx))
            for (double& d : depth) d = snap_depth_to_bin(d, dtau);
        sb.response = single_bounce_response(depth, albedo, n_tau, dtau);
        sb.truth = std::move(depth);
        sb.has_truth = true;
    } else if (type == "corner") {
        CornerScene sc;
        sc.angle = deg2rad(get_or<double>(js, "angle_deg", 90.0, ctx));
        sc.albedo_a = get_or<double>(js, "albedo_a", 0.5, ctx);
        sc.albedo_b = get_or<double>(js, "albedo_b", 0.5, ctx);
        sc.distance = get_or<double>(js, "distance_m", 3.0, ctx);
        sc.patches = get_or<int>(js, "patches", 1024, ctx);
        const int n_tau = get_or<int>(js, "n_tau", 1024, ctx);
        const double dtau = get_or<double>(js, "dtau", 5e-11, ctx);
        sb.response = corner_two_bounce_response(sc, cfg, n_tau, dtau);
        sb.truth = corner_direct_depth(sc, cfg);
        sb.has_truth = true;
    } else if (type == "tensor") {
        sb.response = read_scene_response(resolve_path(base, get_as<std::string>(js, "path", ctx)));
        if (sb.response.nx() != cfg.nx || sb.response.ny() != cfg.ny)
            throw ConfigError("scene: tensor dims do not match the camera resolution");
        if (js.contains("truth")) {
            sb.truth = read_grid(resolve_path(base, get_as<std::string>(js, "truth", ctx)),
                                 TensorKind::Depth);
            if (sb.truth.nx() != cfg.nx || sb.truth.ny() != cfg.ny)
                throw ConfigError("scene: truth dims do not match the camera resolution");
            sb.has_truth = true;
        }
    } else {
        throw ConfigError("scene: unknown type '" + type + "'");
    }
    return sb;
}

inline Affine2D transform_from_json(const nlohmann::json& j) {
    if (j.contains("translate")) {
        auto t = j["translate"].get<std::vector<double>>();
        if (t.size() != 2) throw ConfigError("augment: translate expects [dx, dy]");
        return Affine2D::translation(t[0], t[1]);
    }
    if (j.contains("matrix")) {
        auto m = j["matrix"].get<std::vector<double>>();
        if (m.size() != 6)
            throw ConfigError("augment: matrix expects [a00, a01, a10, a11, tx, ty]");
        Affine2D a;
        a.a00 = m[0];
        a.a01 = m[1];
        a.a10 = m[2];
        a.a11 = m[3];
        a.tx = m[4];
        a.ty = m[5];
        return a;
    }
    throw ConfigError("augment: transform needs 'translate' or 'matrix'");
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw IoError("write failed: " + path);
}

} // namespace detail

// Builds a scene response, applies the augmentation chain, correlates, and
// writes raw frames plus the true depth and a manifest. Response-stage ops
// (delay, motion2) must precede frame-stage ops (gain, kernels, motion1,
// noise); every output is produced in memory before anything is written.
inline CommandResult cmd_generate(const std::string& config_path,
                                  const std::string& out_override = "",
                                  std::optional<std::uint64_t> seed_override = {}) {
    namespace fs = std::filesystem;
    const nlohmann::json j = load_json_file(config_path);
    if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
    const fs::path base = fs::path(config_path).parent_path();

    const CameraConfig cfg = detail::resolve_camera(j, base);
    const std::uint64_t seed =
        seed_override ? *seed_override : detail::get_or<std::uint64_t>(j, "seed", 0, "run config");

    detail::SceneBuild sb = detail::build_scene(detail::require_key(j, "scene", "run config"),
                                                cfg, base);

    // Split the augmentation chain into stages and load every referenced file
    // up front so a bad config cannot leave partial outputs behind.
    bool have_motion2 = false;
    Velocity3D motion2_vel;
    struct FrameOp {
        std::string name;
        Grid2<double> map;       // gain
        KernelMap kernels;       // kernels
        Affine2D transform;      // motion1
        NoiseLUT lut;            // noise
        std::uint64_t seed = 0;  // noise
    };
    std::vector<FrameOp> frame_ops;
    nlohmann::ordered_json manifest_augment = nlohmann::ordered_json::array();

    if (j.contains("augment")) {
        if (!j["augment"].is_array()) throw ConfigError("augment: expected an array");
        for (const nlohmann::json& op : j["augment"]) {
            const std::string name = detail::get_as<std::string>(op, "op", "augment");
            nlohmann::ordered_json mop;
            mop["op"] = name;
            if (name == "delay" || name == "motion2") {
                if (!frame_ops.empty())
                    throw ConfigError("augment: response-stage op '" + name +
                                      "' must precede frame-stage ops");
                if (have_motion2)
                    throw ConfigError("augment: motion2 must be the last response-stage op");
                if (name == "delay") {
                    Grid2<double> map(cfg.nx, cfg.ny);
                    if (op.contains("path")) {
                        std::string p = detail::resolve_path(
                            base, detail::get_as<std::string>(op, "path", "augment.delay"));
                        map = read_grid(p, TensorKind::DelayMap);
                        mop["path"] = op["path"];
                    } else {
                        const double c =
                            detail::get_as<double>(op, "constant_s", "augment.delay");
                        for (double& e : map) e = c;
                        mop["constant_s"] = c;
                    }
                    sb.response = apply_pixel_delay(sb.response, map);
                } else {
                    const nlohmann::json& jv = detail::require_key(op, "velocity", "augment.motion2");
                    motion2_vel.vx = detail::get_or<double>(jv, "vx", 0.0, "augment.motion2");
                    motion2_vel.vy = detail::get_or<double>(jv, "vy", 0.0, "augment.motion2");
                    motion2_vel.vz = detail::get_or<double>(jv, "vz", 0.0, "augment.motion2");
                    motion2_vel.validate();
                    have_motion2 = true;
                    mop["velocity"] = {{"vx", motion2_vel.vx},
                                       {"vy", motion2_vel.vy},
                                       {"vz", motion2_vel.vz}};
                }
            } else if (name == "gain" || name == "kernels" || name == "motion1" ||
                       name == "noise") {
                FrameOp fop;
                fop.name = name;
                if (name == "gain") {
                    if (op.contains("path")) {
                        std::string p = detail::resolve_path(
                            base, detail::get_as<std::string>(op, "path", "augment.gain"));
                        fop.map = read_grid(p, TensorKind::GainMap);
                        mop["path"] = op["path"];
                    } else {
                        const double c = detail::get_as<double>(op, "constant", "augment.gain");
                        fop.map = Grid2<double>(cfg.nx, cfg.ny, c);
                        mop["constant"] = c;
                    }
                } else if (name == "kernels") {
                    std::string p = detail::resolve_path(
                        base, detail::get_as<std::string>(op, "path", "augment.kernels"));
                    fop.kernels = read_kernel_map(p);
                    mop["path"] = op["path"];
                } else if (name == "motion1") {
                    if (!sb.has_truth)
                        throw ConfigError("augment: motion1 requires a scene with truth depth");
                    fop.transform = detail::transform_from_json(
                        detail::require_key(op, "transform", "augment.motion1"));
                    mop["transform"] = op["transform"];
                } else {
                    std::string p = detail::resolve_path(
                        base, detail::get_as<std::string>(op, "lut", "augment.noise"));
                    fop.lut = read_noise_lut(p);
                    fop.seed = detail::get_or<std::uint64_t>(op, "seed", seed, "augment.noise");
                    mop["lut"] = op["lut"];
                    mop["seed"] = fop.seed;
                }
                frame_ops.push_back(std::move(fop));
            } else {
                throw ConfigError("augment: unknown op '" + name + "'");
            }
            manifest_augment.push_back(std::move(mop));
        }
    }

    RawFrames raw;
    if (have_motion2) {
        std::vector<int> steps(cfg.n_channels());
        const int c0 = (cfg.n_channels() - 1) / 2;
        for (int ch = 0; ch < cfg.n_channels(); ++ch) steps[ch] = ch - c0;
        std::vector<SceneResponse> shifted = motion_method2(sb.response, motion2_vel, steps);
        raw.data = Tensor3<double>(cfg.n_channels(), cfg.nx, cfg.ny);
        raw.channels = cfg.channels;
        raw.channel_freq = cfg.channel_freq;
        for (int ch = 0; ch < cfg.n_channels(); ++ch) {
            Grid2<double> plane = correlate_channel(shifted[ch], cfg.channels[ch]);
            std::copy(plane.begin(), plane.end(), raw.data.plane(ch));
        }
    } else {
        raw = correlate(sb.response, cfg);
    }

    for (const auto& fop : frame_ops) {
        if (fop.name == "gain") {
            raw = apply_gain_map(raw, fop.map);
        } else if (fop.name == "kernels") {
            raw = apply_pixel_kernels(raw, fop.kernels);
        } else if (fop.name == "motion1") {
            MotionLayer layer;
            layer.frames = raw;
            layer.depth = sb.truth;
            raw = motion_method1({layer}, {fop.transform}).frames;
        } else {
            raw = sample_noise(fop.lut, raw, fop.seed);
        }
    }

    const nlohmann::json jout = j.value("outputs", nlohmann::json::object());
    const std::string raw_name = jout.value("raw", "raw.toft");
    const std::string truth_name = jout.value("truth", "truth.toft");
    const std::string response_name = jout.value("response", "response.toft");
    const bool save_response = detail::get_or<bool>(j, "save_response", false, "run config");

    CommandResult res;
    res.out_dir = !out_override.empty()
                      ? out_override
                      : detail::get_or<std::string>(j, "out_dir", "out", "run config");
    fs::create_directories(res.out_dir);
    const fs::path out(res.out_dir);

    write_raw_frames((out / raw_name).string(), raw);
    res.outputs.push_back(raw_name);
    if (sb.has_truth) {
        write_grid((out / truth_name).string(), sb.truth, TensorKind::Depth);
        res.outputs.push_back(truth_name);
    }
    if (save_response) {
        write_scene_response((out / response_name).string(), sb.response);
        res.outputs.push_back(response_name);
    }

    nlohmann::ordered_json manifest;
    manifest["tool"] = "tofsim";
    manifest["format_version"] = 1;
    manifest["command"] = "generate";
    manifest["seed"] = seed;
    manifest["camera"] = camera_to_json(cfg);
    manifest["scene"] = j["scene"];
    manifest["augment"] = std::move(manifest_augment);
    manifest["outputs"] = res.outputs;
    detail::write_text_file((out / "manifest.json").string(), manifest.dump(2) + "\n");
    res.outputs.push_back("manifest.json");
    return res;
}

namespace detail {

inline void check_frames_match(const RawFrames& raw, const CameraConfig& cfg) {
    if (raw.n_channels() != cfg.n_channels() || raw.nx() != cfg.nx || raw.ny() != cfg.ny)
        throw ConfigError("raw frames do not match the camera config dimensions");
    for (int ch = 0; ch < cfg.n_channels(); ++ch) {
        const CameraFunction &a = raw.channels[ch], &b = cfg.channels[ch];
        bool same = a.kind == b.kind && raw.channel_freq[ch] == cfg.channel_freq[ch] &&
                    std::abs(a.omega - b.omega) <= 1e-9 * b.omega &&
                    std::abs(a.psi - b.psi) <= 1e-9 &&
                    std::abs(a.linear_gain() - b.linear_gain()) <=
                        1e-9 * std::abs(b.linear_gain());
        if (a.kind == CameraKind::ClippedSinusoid)
            same = same && std::abs(a.b2 - b.b2) <= 1e-9 * std::abs(b.b2);
        if (!same)
            throw ConfigError("raw frames channel metadata does not match the camera config");
    }
}

} // namespace detail

// Reads raw frames and true depth, runs the named pipeline, and writes the
// reconstructed depth, validity mask, metric report (JSON and text), and a
// manifest.
inline CommandResult cmd_reconstruct_eval(const std::string& config_path,
                                          const std::string& out_override = "") {
    namespace fs = std::filesystem;
    const nlohmann::json j = load_json_file(config_path);
    if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
    const fs::path base = fs::path(config_path).parent_path();

    const CameraConfig cfg = detail::resolve_camera(j, base);
    const std::string raw_path =
        detail::resolve_path(base, detail::get_as<std::string>(j, "raw", "run config"));
    const std::string truth_path =
        detail::resolve_path(base, detail::get_as<std::string>(j, "truth", "run config"));
    const std::string pipeline = detail::get_as<std::string>(j, "pipeline", "run config");
    const std::string label = detail::get_or<std::string>(j, "label", pipeline, "run config");

    PipelineParams params;
    const nlohmann::json jp = j.value("params", nlohmann::json::object());
    params.mask.amplitude_frac =
        detail::get_or<double>(jp, "mask_amplitude_frac", params.mask.amplitude_frac, "params");
    params.mask.consistency_m =
        detail::get_or<double>(jp, "mask_consistency_m", params.mask.consistency_m, "params");
    params.bilateral_sigma_px =
        detail::get_or<double>(jp, "bilateral_sigma_px", params.bilateral_sigma_px, "params");
    params.bilateral_sigma_range_m = detail::get_or<double>(
        jp, "bilateral_sigma_range_m", params.bilateral_sigma_range_m, "params");
    params.phasor_lo_m = detail::get_or<double>(jp, "phasor_lo_m", params.phasor_lo_m, "params");
    params.phasor_hi_m = detail::get_or<double>(jp, "phasor_hi_m", params.phasor_hi_m, "params");
    params.projection_grid_step = detail::get_or<double>(
        jp, "projection_grid_step", params.projection_grid_step, "params");

    EvalRange range;
    HistSpec hist;
    const nlohmann::json je = j.value("eval", nlohmann::json::object());
    range.lo_m = detail::get_or<double>(je, "range_lo_m", range.lo_m, "eval");
    range.hi_m = detail::get_or<double>(je, "range_hi_m", range.hi_m, "eval");
    hist.lo_cm = detail::get_or<double>(je, "hist_lo_cm", hist.lo_cm, "eval");
    hist.hi_cm = detail::get_or<double>(je, "hist_hi_cm", hist.hi_cm, "eval");
    hist.bins = detail::get_or<int>(je, "hist_bins", hist.bins, "eval");

    const RawFrames raw = read_raw_frames(raw_path);
    detail::check_frames_match(raw, cfg);
    const Grid2<double> truth = read_grid(truth_path, TensorKind::Depth);
    if (truth.nx() != cfg.nx || truth.ny() != cfg.ny)
        throw ConfigError("truth depth dims do not match the camera config");

    PipelineResult pr = run_pipeline(pipeline, raw, cfg, params);
    Metrics m = depth_error_stats(pr.depth, truth, pr.valid, range, hist);
    Report rep = export_report({m}, {label});

    CommandResult res;
    res.out_dir = !out_override.empty()
                      ? out_override
                      : detail::get_or<std::string>(j, "out_dir", "out", "run config");
    fs::create_directories(res.out_dir);
    const fs::path out(res.out_dir);

    write_grid((out / "depth.toft").string(), pr.depth.d, TensorKind::Depth);
    write_mask((out / "mask.toft").string(), pr.valid);
    detail::write_text_file((out / "report.json").string(), rep.json.dump(2) + "\n");
    detail::write_text_file((out / "report.txt").string(), rep.table);
    res.outputs = {"depth.toft", "mask.toft", "report.json", "report.txt"};

    nlohmann::ordered_json manifest;
    manifest["tool"] = "tofsim";
    manifest["format_version"] = 1;
    manifest["command"] = "reconstruct-eval";
    manifest["camera"] = camera_to_json(cfg);
    manifest["pipeline"] = pipeline;
    manifest["label"] = label;
    manifest["params"] = {{"mask_amplitude_frac", params.mask.amplitude_frac},
                          {"mask_consistency_m", params.mask.consistency_m},
                          {"bilateral_sigma_px", params.bilateral_sigma_px},
                          {"bilateral_sigma_range_m", params.bilateral_sigma_range_m},
                          {"phasor_lo_m", params.phasor_lo_m},
                          {"phasor_hi_m", params.phasor_hi_m},
                          {"projection_grid_step", params.projection_grid_step}};
    manifest["eval"] = {{"range_lo_m", range.lo_m},
                        {"range_hi_m", range.hi_m},
                        {"hist_lo_cm", hist.lo_cm},
                        {"hist_hi_cm", hist.hi_cm},
                        {"hist_bins", hist.bins}};
    manifest["inputs"] = {{"raw", j["raw"]}, {"truth", j["truth"]}};
    manifest["outputs"] = res.outputs;
    detail::write_text_file((out / "manifest.json").string(), manifest.dump(2) + "\n");
    res.outputs.push_back("manifest.json");
    return res;
}

} // namespace tof
