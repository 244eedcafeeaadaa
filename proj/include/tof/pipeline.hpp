// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/reconstruct.hpp"
#include "tof/simulate.hpp"

namespace tof {

struct PipelineParams {
    MaskThresholds mask;
    double bilateral_sigma_px = 2.0;
    double bilateral_sigma_range_m = 0.05;
    double phasor_lo_m = 1.5;
    double phasor_hi_m = 5.0;
    double projection_grid_step = 5e-11; // tau grid for onebounce projection
};

struct PipelineResult {
    DepthMap depth;
    Mask valid;
};

inline const std::vector<std::string>& pipeline_names() {
    static const std::vector<std::string> names = {"lf2", "lf2star", "phasor",
                                                   "onebounce+lf2star"};
    return names;
}

namespace detail {

inline PipelineResult run_lf2_core(const RawFrames& frames, const CameraConfig& cfg,
                                   const PipelineParams& p, bool bilateral) {
    UnwrapConstants uc = make_unwrap_constants(cfg.omegas);
    std::vector<Grid2<double>> phases(cfg.n_freqs());
    std::vector<Mask> valids(cfg.n_freqs());
    Grid2<double> min_amp(frames.nx(), frames.ny(),
                          std::numeric_limits<double>::infinity());
    for (int l = 0; l < cfg.n_freqs(); ++l) {
        PhaseEstimate pe = estimate_phase(frames, l);
        for (std::size_t i = 0; i < min_amp.size(); ++i)
            min_amp[i] = std::min(min_amp[i], pe.amplitude[i]);
        phases[l] = std::move(pe.phase);
        valids[l] = std::move(pe.valid);
    }
    UnwrapResult ur = unwrap_crt(phases, cfg.omegas, uc, &valids);

    Mask reliable = mask_unreliable(frames, ur.per_freq, p.mask);
    Mask valid(frames.nx(), frames.ny());
    for (std::size_t i = 0; i < valid.size(); ++i)
        valid[i] = ur.valid[i] && reliable[i] ? 1 : 0;

    // Guide amplitude for the bilateral pass: the weakest per-frequency return.
    ur.depth.amplitude = std::move(min_amp);

    PipelineResult res;
    res.depth = bilateral ? bilateral_filter(ur.depth, valid, p.bilateral_sigma_px,
                                             p.bilateral_sigma_range_m)
                          : std::move(ur.depth);
    res.valid = std::move(valid);
    return res;
}

inline PipelineResult run_phasor(const RawFrames& frames, const PipelineParams& p) {
    PhasorResult pr = phasor_reconstruct(frames, p.phasor_lo_m, p.phasor_hi_m);
    PipelineResult res;
    res.depth = bilateral_filter(pr.depth, pr.valid, p.bilateral_sigma_px,
                                 p.bilateral_sigma_range_m);
    res.valid = std::move(pr.valid);
    return res;
}

} // namespace detail

// Named reconstruction pipelines:
//   "lf2"              multi-frequency unwrap + reliability mask + bilateral
//   "lf2star"          same with the bilateral filter disabled
//   "phasor"           two-frequency beat reconstruction + bilateral
//   "onebounce+lf2star" per-pixel one-bounce projection, then lf2star
inline PipelineResult run_pipeline(const std::string& name, const RawFrames& frames,
                                   const CameraConfig& cfg, const PipelineParams& p = {}) {
    frames.validate();
    cfg.validate();
    if (frames.n_channels() != cfg.n_channels() || frames.nx() != cfg.nx ||
        frames.ny() != cfg.ny)
        throw ConfigError("run_pipeline: frames do not match the config");

    if (name == "lf2") return detail::run_lf2_core(frames, cfg, p, true);
    if (name == "lf2star") return detail::run_lf2_core(frames, cfg, p, false);
    if (name == "phasor") return detail::run_phasor(frames, p);
    if (name == "onebounce+lf2star") {
        ProjectedFrames pf = project_frames(frames, cfg, 0.0, p.projection_grid_step);
        PipelineResult res = detail::run_lf2_core(pf.frames, cfg, p, false);
        for (std::size_t i = 0; i < res.valid.size(); ++i)
            if (!pf.valid[i]) res.valid[i] = 0;
        return res;
    }

    std::string msg = "unknown pipeline '" + name + "'; valid names:";
    for (const std::string& n : pipeline_names()) msg += " " + n;
    throw ConfigError(msg);
}

} // namespace tof
