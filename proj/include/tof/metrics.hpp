// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/grid.hpp"

namespace tof {

// Quantile with linear interpolation between order statistics (the common
// "type 7" rule): h = (n-1)*p, q = v[floor(h)] + frac(h)*(v[floor(h)+1] -
// v[floor(h)]) on sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    auto i0 = static_cast<std::size_t>(h);
    std::size_t i1 = std::min(i0 + 1, sorted.size() - 1);
    return sorted[i0] + (h - static_cast<double>(i0)) * (sorted[i1] - sorted[i0]);
}

inline double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, p);
}

struct EvalRange {
    double lo_m = 1.5;
    double hi_m = 5.0;
};

struct HistSpec {
    double lo_cm = -25.0;
    double hi_cm = 25.0;
    int bins = 100;
};

// Signed depth error statistics over the pixels whose true depth lies inside
// the evaluation range. Errors are predicted minus true, in centimeters;
// relative errors are in percent of the true depth. Out-of-histogram errors
// are clamped into the end bins so the cumulative counts always sum to the
// evaluated pixel count.
struct Metrics {
    bool empty = true;
    std::size_t n_in_range = 0;  // pixels with true depth inside the range
    std::size_t n_evaluated = 0; // of those, valid pixels with finite output
    double median_cm = 0.0;
    double iqr_cm = 0.0;
    double p90_abs_cm = 0.0;
    double density_pct = 0.0; // 100 * n_evaluated / n_in_range
    double median_rel_pct = 0.0;
    double iqr_rel_pct = 0.0;
    double p90_rel_pct = 0.0;
    std::vector<double> cdf_edges_cm;       // bins + 1 edges
    std::vector<std::size_t> cdf_cum_counts; // cumulative per-bin counts
};

inline Metrics depth_error_stats(const DepthMap& pred, const Grid2<double>& truth,
                                 const Mask& valid, const EvalRange& range = {},
                                 const HistSpec& hist = {}) {
    if (!pred.d.same_shape(truth) || pred.d.nx() != valid.nx() || pred.d.ny() != valid.ny())
        throw ConfigError("depth_error_stats: dims mismatch");
    if (!(range.hi_m > range.lo_m)) throw ConfigError("depth_error_stats: bad range");
    if (hist.bins < 1 || !(hist.hi_cm > hist.lo_cm))
        throw ConfigError("depth_error_stats: bad histogram spec");

    Metrics m;
    std::vector<double> err, abs_err, rel, abs_rel;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double t = truth[i];
        if (!(t >= range.lo_m && t <= range.hi_m)) continue;
        ++m.n_in_range;
        if (!valid[i] || !std::isfinite(pred.d[i])) continue;
        ++m.n_evaluated;
        double e_cm = (pred.d[i] - t) * 100.0;
        err.push_back(e_cm);
        abs_err.push_back(std::abs(e_cm));
        double r_pct = (pred.d[i] - t) / t * 100.0;
        rel.push_back(r_pct);
        abs_rel.push_back(std::abs(r_pct));
    }

    m.cdf_edges_cm.resize(hist.bins + 1);
    for (int b = 0; b <= hist.bins; ++b)
        m.cdf_edges_cm[b] = hist.lo_cm + (hist.hi_cm - hist.lo_cm) * b / hist.bins;
    std::vector<std::size_t> counts(hist.bins, 0);
    for (double e : err) {
        double t = (e - hist.lo_cm) / (hist.hi_cm - hist.lo_cm) * hist.bins;
        int b = std::clamp(static_cast<int>(std::floor(t)), 0, hist.bins - 1);
        ++counts[b];
    }
    m.cdf_cum_counts.resize(hist.bins);
    std::size_t run = 0;
    for (int b = 0; b < hist.bins; ++b) {
        run += counts[b];
        m.cdf_cum_counts[b] = run;
    }

    if (m.n_in_range > 0)
        m.density_pct = 100.0 * static_cast<double>(m.n_evaluated) /
                        static_cast<double>(m.n_in_range);
    if (err.empty()) return m;

    m.empty = false;
    std::sort(err.begin(), err.end());
    std::sort(abs_err.begin(), abs_err.end());
    std::sort(rel.begin(), rel.end());
    std::sort(abs_rel.begin(), abs_rel.end());
    m.median_cm = quantile_sorted(err, 0.5);
    m.iqr_cm = quantile_sorted(err, 0.75) - quantile_sorted(err, 0.25);
    m.p90_abs_cm = quantile_sorted(abs_err, 0.9);
    m.median_rel_pct = quantile_sorted(rel, 0.5);
    m.iqr_rel_pct = quantile_sorted(rel, 0.75) - quantile_sorted(rel, 0.25);
    m.p90_rel_pct = quantile_sorted(abs_rel, 0.9);
    return m;
}

struct Report {
    nlohmann::ordered_json json;
    std::string table; // fixed-width text summary
};

// Bundles labeled metric sets into a machine-readable report plus a plain
// text table. Labels must be unique; entries keep the given order.
inline Report export_report(const std::vector<Metrics>& metrics,
                            const std::vector<std::string>& labels) {
    if (metrics.size() != labels.size())
        throw ConfigError("export_report: metrics/label count mismatch");
    std::set<std::string> seen;
    for (const std::string& l : labels)
        if (!seen.insert(l).second) throw ConfigError("export_report: duplicate label '" + l + "'");

    Report rep;
    rep.json = nlohmann::ordered_json::object();
    rep.json["quantile_rule"] = "linear interpolation between order statistics (type 7)";
    rep.json["error_convention"] = "predicted minus true depth, centimeters";
    auto entries = nlohmann::ordered_json::array();

    std::string table;
    char line[256];
    std::snprintf(line, sizeof(line), "%-24s %12s %12s %12s %12s\n", "label", "median_cm",
                  "iqr_cm", "p90_abs_cm", "density_pct");
    table += line;

    for (std::size_t e = 0; e < metrics.size(); ++e) {
        const Metrics& m = metrics[e];
        nlohmann::ordered_json j;
        j["label"] = labels[e];
        j["empty"] = m.empty;
        j["n_in_range"] = m.n_in_range;
        j["n_evaluated"] = m.n_evaluated;
        j["median_cm"] = m.median_cm;
        j["iqr_cm"] = m.iqr_cm;
        j["p90_abs_cm"] = m.p90_abs_cm;
        j["density_pct"] = m.density_pct;
        j["median_rel_pct"] = m.median_rel_pct;
        j["iqr_rel_pct"] = m.iqr_rel_pct;
        j["p90_rel_pct"] = m.p90_rel_pct;
        j["cdf"] = {{"edges_cm", m.cdf_edges_cm}, {"cum_counts", m.cdf_cum_counts}};
        entries.push_back(std::move(j));

        std::snprintf(line, sizeof(line), "%-24s %12.4f %12.4f %12.4f %12.2f\n",
                      labels[e].c_str(), m.median_cm, m.iqr_cm, m.p90_abs_cm, m.density_pct);
        table += line;
    }
    rep.json["entries"] = std::move(entries);
    rep.table = std::move(table);
    return rep;
}

} // namespace tof
