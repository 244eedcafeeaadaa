// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tof/camera.hpp"
#include "tof/common.hpp"
#include "tof/grid.hpp"
#include "tof/motion.hpp"
#include "tof/simulate.hpp"
#include "tof/transient.hpp"

namespace tof {

// TOFT container: "TOFT" magic, u16 version (1), u16 kind, u32 ndim,
// u32 dims[ndim], u32 extension length + UTF-8 JSON, then the row-major
// (slowest dimension first) float32 payload. All integers and floats are
// little-endian.
enum class TensorKind : std::uint16_t {
    Generic = 0,
    SceneResponseData = 1,
    RawFramesData = 2,
    Depth = 3,
    MaskData = 4,
    NoiseLutData = 5,
    FlowFieldData = 6,
    KernelMapData = 7,
    GainMap = 8,
    DelayMap = 9,
};

struct TensorFile {
    TensorKind kind = TensorKind::Generic;
    std::vector<std::uint32_t> dims;
    nlohmann::json ext; // null when absent
    std::vector<float> data;
};

namespace detail {

inline void put_u16(std::string& b, std::uint16_t v) {
    b.push_back(static_cast<char>(v & 0xff));
    b.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& b, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) b.push_back(static_cast<char>((v >> s) & 0xff));
}

inline void put_f32(std::string& b, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(b, bits);
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError("truncated TOFT file: " + path);
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(buf[pos]) |
                                            (static_cast<unsigned char>(buf[pos + 1]) << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int s = 0; s < 4; ++s)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + s])) << (8 * s);
        pos += 4;
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

} // namespace detail

inline void write_tensor(const std::string& path, TensorKind kind,
                         const std::vector<std::uint32_t>& dims,
                         const std::vector<float>& data,
                         const nlohmann::json& ext = nullptr) {
    std::uint64_t total = 1;
    for (std::uint32_t d : dims) total *= d;
    if (total != data.size()) throw ConfigError("write_tensor: dims do not match payload");

    std::string buf;
    buf.reserve(64 + data.size() * 4);
    buf += "TOFT";
    detail::put_u16(buf, 1);
    detail::put_u16(buf, static_cast<std::uint16_t>(kind));
    detail::put_u32(buf, static_cast<std::uint32_t>(dims.size()));
    for (std::uint32_t d : dims) detail::put_u32(buf, d);
    std::string ext_str = ext.is_null() ? std::string() : ext.dump();
    detail::put_u32(buf, static_cast<std::uint32_t>(ext_str.size()));
    buf += ext_str;
    for (float v : data) detail::put_f32(buf, v);

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed: " + path);
}

inline TensorFile read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    detail::ByteReader r{buf, 0, path};
    r.need(4);
    if (buf.compare(0, 4, "TOFT") != 0) throw IoError("not a TOFT file: " + path);
    r.pos = 4;
    std::uint16_t version = r.u16();
    if (version != 1) throw IoError("unsupported TOFT version in " + path);

    TensorFile t;
    t.kind = static_cast<TensorKind>(r.u16());
    std::uint32_t ndim = r.u32();
    if (ndim > 8) throw IoError("corrupt TOFT header: " + path);
    std::uint64_t total = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        t.dims.push_back(r.u32());
        total *= t.dims.back();
    }
    std::uint32_t ext_len = r.u32();
    r.need(ext_len);
    if (ext_len > 0) {
        try {
            t.ext = nlohmann::json::parse(buf.substr(r.pos, ext_len));
        } catch (const nlohmann::json::exception&) {
            throw IoError("corrupt TOFT extension block: " + path);
        }
    }
    r.pos += ext_len;
    if (buf.size() - r.pos != total * 4) throw IoError("TOFT payload size mismatch: " + path);
    t.data.resize(total);
    for (std::uint64_t i = 0; i < total; ++i) t.data[i] = r.f32();
    return t;
}

// ---------------------------------------------------------------------------
// Typed wrappers
// ---------------------------------------------------------------------------

inline void write_grid(const std::string& path, const Grid2<double>& g, TensorKind kind,
                       const nlohmann::json& ext = nullptr) {
    std::vector<float> data(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) data[i] = static_cast<float>(g[i]);
    write_tensor(path, kind,
                 {static_cast<std::uint32_t>(g.nx()), static_cast<std::uint32_t>(g.ny())},
                 data, ext);
}

inline Grid2<double> read_grid(const std::string& path, TensorKind expect) {
    TensorFile t = read_tensor(path);
    if (t.kind != expect) throw IoError("unexpected tensor kind in " + path);
    if (t.dims.size() != 2) throw IoError("expected a 2-d tensor in " + path);
    Grid2<double> g(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = t.data[i];
    return g;
}

inline void write_mask(const std::string& path, const Mask& m) {
    std::vector<float> data(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) data[i] = m[i] ? 1.0f : 0.0f;
    write_tensor(path, TensorKind::MaskData,
                 {static_cast<std::uint32_t>(m.nx()), static_cast<std::uint32_t>(m.ny())},
                 data);
}

inline Mask read_mask(const std::string& path) {
    TensorFile t = read_tensor(path);
    if (t.kind != TensorKind::MaskData) throw IoError("unexpected tensor kind in " + path);
    if (t.dims.size() != 2) throw IoError("expected a 2-d tensor in " + path);
    Mask m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = t.data[i] != 0.0f ? 1 : 0;
    return m;
}

inline void write_scene_response(const std::string& path, const SceneResponse& sr) {
    std::vector<float> data(sr.a.size());
    for (std::size_t i = 0; i < sr.a.size(); ++i) data[i] = static_cast<float>(sr.a[i]);
    nlohmann::json ext = {{"dtau", sr.dtau}, {"t0", sr.t0}};
    write_tensor(path, TensorKind::SceneResponseData,
                 {static_cast<std::uint32_t>(sr.n_tau()), static_cast<std::uint32_t>(sr.nx()),
                  static_cast<std::uint32_t>(sr.ny())},
                 data, ext);
}

inline SceneResponse read_scene_response(const std::string& path) {
    TensorFile t = read_tensor(path);
    if (t.kind != TensorKind::SceneResponseData)
        throw IoError("unexpected tensor kind in " + path);
    if (t.dims.size() != 3) throw IoError("expected a 3-d tensor in " + path);
    SceneResponse sr;
    sr.a = Tensor3<double>(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                           static_cast<int>(t.dims[2]));
    for (std::size_t i = 0; i < sr.a.size(); ++i) sr.a[i] = t.data[i];
    if (!t.ext.is_object() || !t.ext.contains("dtau"))
        throw IoError("scene response missing dtau in " + path);
    sr.dtau = t.ext["dtau"].get<double>();
    sr.t0 = t.ext.value("t0", 0.0);
    sr.validate();
    return sr;
}

inline nlohmann::json camera_function_to_json(const CameraFunction& f) {
    nlohmann::json j;
    j["kind"] = f.kind == CameraKind::Sinusoid ? "sinusoid" : "clipped";
    if (f.kind == CameraKind::Sinusoid) {
        j["b"] = f.b;
    } else {
        j["b1"] = f.b1;
        j["b2"] = f.b2;
    }
    j["psi"] = f.psi;
    j["omega"] = f.omega;
    return j;
}

inline CameraFunction camera_function_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "sinusoid")
        return make_sinusoid(j.at("b").get<double>(), j.at("psi").get<double>(),
                             j.at("omega").get<double>());
    if (kind == "clipped")
        return make_clipped(j.at("b1").get<double>(), j.at("b2").get<double>(),
                            j.at("psi").get<double>(), j.at("omega").get<double>());
    throw ConfigError("unknown camera function kind '" + kind + "'");
}

inline void write_raw_frames(const std::string& path, const RawFrames& rf) {
    rf.validate();
    std::vector<float> data(rf.data.size());
    for (std::size_t i = 0; i < rf.data.size(); ++i) data[i] = static_cast<float>(rf.data[i]);
    nlohmann::json chans = nlohmann::json::array();
    for (const CameraFunction& f : rf.channels) chans.push_back(camera_function_to_json(f));
    nlohmann::json ext = {{"channels", chans}, {"channel_freq", rf.channel_freq}};
    write_tensor(path, TensorKind::RawFramesData,
                 {static_cast<std::uint32_t>(rf.n_channels()),
                  static_cast<std::uint32_t>(rf.nx()), static_cast<std::uint32_t>(rf.ny())},
                 data, ext);
}

inline RawFrames read_raw_frames(const std::string& path) {
    TensorFile t = read_tensor(path);
    if (t.kind != TensorKind::RawFramesData) throw IoError("unexpected tensor kind in " + path);
    if (t.dims.size() != 3) throw IoError("expected a 3-d tensor in " + path);
    RawFrames rf;
    rf.data = Tensor3<double>(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                              static_cast<int>(t.dims[2]));
    for (std::size_t i = 0; i < rf.data.size(); ++i) rf.data[i] = t.data[i];
    if (!t.ext.is_object() || !t.ext.contains("channels") || !t.ext.contains("channel_freq"))
        throw IoError("raw frames missing channel metadata in " + path);
    try {
        for (const auto& jc : t.ext["channels"]) rf.channels.push_back(camera_function_from_json(jc));
        rf.channel_freq = t.ext["channel_freq"].get<std::vector<int>>();
    } catch (const nlohmann::json::exception&) {
        throw IoError("corrupt channel metadata in " + path);
    }
    rf.validate();
    return rf;
}

inline void write_noise_lut(const std::string& path, const NoiseLUT& lut) {
    lut.validate();
    std::vector<float> data;
    std::vector<std::size_t> offsets = {0};
    for (const auto& bin : lut.table) {
        for (double v : bin) data.push_back(static_cast<float>(v));
        offsets.push_back(data.size());
    }
    nlohmann::json ext = {{"edges", lut.edges}, {"offsets", offsets}};
    write_tensor(path, TensorKind::NoiseLutData, {static_cast<std::uint32_t>(data.size())},
                 data, ext);
}

inline NoiseLUT read_noise_lut(const std::string& path) {
    TensorFile t = read_tensor(path);
    if (t.kind != TensorKind::NoiseLutData) throw IoError("unexpected tensor kind in " + path);
    if (!t.ext.is_object() || !t.ext.contains("edges") || !t.ext.contains("offsets"))
        throw IoError("noise LUT missing metadata in " + path);
    NoiseLUT lut;
    std::vector<std::size_t> offsets;
    try {
        lut.edges = t.ext["edges"].get<std::vector<double>>();
        offsets = t.ext["offsets"].get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception&) {
        throw IoError("corrupt noise LUT metadata in " + path);
    }
    if (offsets.size() != lut.edges.size() || offsets.empty() ||
        offsets.back() != t.data.size())
        throw IoError("inconsistent noise LUT offsets in " + path);
    for (std::size_t b = 0; b + 1 < offsets.size(); ++b) {
        std::vector<double> bin;
        for (std::size_t i = offsets[b]; i < offsets[b + 1]; ++i) bin.push_back(t.data[i]);
        lut.table.push_back(std::move(bin));
    }
    lut.validate();
    return lut;
}

inline void write_flow_field(const std::string& path, const FlowField& ff, int reference) {
    if (ff.n_fields() == 0) throw ConfigError("write_flow_field: empty flow field");
    const int nx = ff.dx[0].nx(), ny = ff.dx[0].ny();
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(2 * ff.n_fields()) * nx * ny);
    for (int k = 0; k < ff.n_fields(); ++k) {
        for (double v : ff.dx[k]) data.push_back(static_cast<float>(v));
        for (double v : ff.dy[k]) data.push_back(static_cast<float>(v));
    }
    nlohmann::json ext = {{"reference", reference}};
    write_tensor(path, TensorKind::FlowFieldData,
                 {static_cast<std::uint32_t>(2 * ff.n_fields()),
                  static_cast<std::uint32_t>(nx), static_cast<std::uint32_t>(ny)},
                 data, ext);
}

inline std::pair<FlowField, int> read_flow_field(const std::string& path) {
    TensorFile t = read_tensor(path);
    if (t.kind != TensorKind::FlowFieldData) throw IoError("unexpected tensor kind in " + path);
    if (t.dims.size() != 3 || t.dims[0] % 2 != 0)
        throw IoError("expected (2k, nx, ny) flow tensor in " + path);
    const int n_fields = static_cast<int>(t.dims[0] / 2);
    const int nx = static_cast<int>(t.dims[1]), ny = static_cast<int>(t.dims[2]);
    const std::size_t plane = static_cast<std::size_t>(nx) * ny;
    FlowField ff;
    for (int k = 0; k < n_fields; ++k) {
        Grid2<double> dx(nx, ny), dy(nx, ny);
        const float* px = t.data.data() + static_cast<std::size_t>(2 * k) * plane;
        const float* py = px + plane;
        for (std::size_t i = 0; i < plane; ++i) {
            dx[i] = px[i];
            dy[i] = py[i];
        }
        ff.dx.push_back(std::move(dx));
        ff.dy.push_back(std::move(dy));
    }
    int reference = t.ext.is_object() ? t.ext.value("reference", -1) : -1;
    return {std::move(ff), reference};
}

inline void write_kernel_map(const std::string& path, const KernelMap& km) {
    std::vector<float> data(km.w.size());
    for (std::size_t i = 0; i < km.w.size(); ++i) data[i] = static_cast<float>(km.w[i]);
    nlohmann::json ext = {
        {"kind", km.kind == KernelKind::CrossChannel ? "cross" : "spatial"}, {"k", km.k}};
    write_tensor(path, TensorKind::KernelMapData,
                 {static_cast<std::uint32_t>(km.w.n0()), static_cast<std::uint32_t>(km.w.nx()),
                  static_cast<std::uint32_t>(km.w.ny())},
                 data, ext);
}

inline KernelMap read_kernel_map(const std::string& path) {
    TensorFile t = read_tensor(path);
    if (t.kind != TensorKind::KernelMapData) throw IoError("unexpected tensor kind in " + path);
    if (t.dims.size() != 3) throw IoError("expected a 3-d tensor in " + path);
    if (!t.ext.is_object() || !t.ext.contains("kind"))
        throw IoError("kernel map missing metadata in " + path);
    KernelMap km;
    std::string kind = t.ext["kind"].get<std::string>();
    if (kind == "cross")
        km.kind = KernelKind::CrossChannel;
    else if (kind == "spatial")
        km.kind = KernelKind::Spatial;
    else
        throw IoError("unknown kernel kind in " + path);
    km.k = t.ext.value("k", 0);
    km.w = Tensor3<double>(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                           static_cast<int>(t.dims[2]));
    for (std::size_t i = 0; i < km.w.size(); ++i) km.w[i] = t.data[i];
    return km;
}

} // namespace tof
