// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors

#include <catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tof/tof.hpp"

using Catch::Approx;
using namespace tof;

namespace {

std::string scratch_path(const std::string& name) {
    static const std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() / "tofsim_io_test";
        std::filesystem::create_directories(d);
        return d;
    }();
    return (dir / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void append_u16(std::string& b, std::uint16_t v) {
    b.push_back(static_cast<char>(v & 0xff));
    b.push_back(static_cast<char>(v >> 8));
}

void append_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

} // namespace

TEST_CASE("depth grids round trip with float32 precision") {
    Grid2<double> g(3, 5);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.25 * static_cast<double>(i) - 1.5;
    std::string path = scratch_path("grid.toft");
    write_grid(path, g, TensorKind::Depth);
    Grid2<double> back = read_grid(path, TensorKind::Depth);
    REQUIRE(back.nx() == 3);
    REQUIRE(back.ny() == 5);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back[i] == g[i]);

    CHECK_THROWS_AS(read_grid(path, TensorKind::GainMap), IoError);
}

TEST_CASE("masks round trip exactly") {
    Mask m(4, 4, 1);
    m(0, 0) = 0;
    m(2, 3) = 0;
    std::string path = scratch_path("mask.toft");
    write_mask(path, m);
    Mask back = read_mask(path);
    REQUIRE(back.nx() == 4);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(back[i] == m[i]);
}

TEST_CASE("scene responses keep their time axis metadata") {
    SceneResponse sr;
    sr.a = Tensor3<double>(8, 2, 3);
    sr.dtau = 5e-11;
    sr.t0 = 1.25e-9;
    sr.a(3, 1, 2) = 0.5;
    sr.a(7, 0, 0) = 2.0;
    std::string path = scratch_path("resp.toft");
    write_scene_response(path, sr);
    SceneResponse back = read_scene_response(path);
    CHECK(back.dtau == sr.dtau);
    CHECK(back.t0 == sr.t0);
    REQUIRE(back.n_tau() == 8);
    for (std::size_t i = 0; i < sr.a.size(); ++i) CHECK(back.a[i] == sr.a[i]);
}

TEST_CASE("raw frames keep channel metadata including clipped cameras") {
    CameraConfig cfg = make_uniform_config({4e7, 5e7}, 3, 1.5, 2, 2, 70.0);
    RawFrames rf;
    rf.data = Tensor3<double>(6, 2, 2);
    for (std::size_t i = 0; i < rf.data.size(); ++i)
        rf.data[i] = 0.125 * static_cast<double>(i);
    rf.channels = cfg.channels;
    rf.channel_freq = cfg.channel_freq;
    rf.channels[4] = make_clipped(2.0, 1.0, 0.7, cfg.omegas[1]);

    std::string path = scratch_path("frames.toft");
    write_raw_frames(path, rf);
    RawFrames back = read_raw_frames(path);
    REQUIRE(back.n_channels() == 6);
    CHECK(back.channel_freq == rf.channel_freq);
    for (std::size_t i = 0; i < rf.data.size(); ++i) CHECK(back.data[i] == rf.data[i]);
    for (int j = 0; j < 6; ++j) {
        CHECK(back.channels[j].kind == rf.channels[j].kind);
        CHECK(back.channels[j].psi == Approx(rf.channels[j].psi).margin(1e-15));
        CHECK(back.channels[j].omega == Approx(rf.channels[j].omega).epsilon(1e-15));
    }
    CHECK(back.channels[4].kind == CameraKind::ClippedSinusoid);
    CHECK(back.channels[4].b1 == 2.0);
    CHECK(back.channels[4].b2 == 1.0);
}

TEST_CASE("noise lookup tables round trip") {
    NoiseLUT lut;
    lut.edges = {-1.0, 0.0, 2.0};
    lut.table = {{-0.5, 0.25}, {1.0, 1.5, 2.0}};
    std::string path = scratch_path("lut.toft");
    write_noise_lut(path, lut);
    NoiseLUT back = read_noise_lut(path);
    CHECK(back.edges == lut.edges);
    REQUIRE(back.table.size() == 2);
    CHECK(back.table[0] == lut.table[0]);
    CHECK(back.table[1] == lut.table[1]);
}

TEST_CASE("flow fields round trip with their reference channel") {
    FlowField ff;
    for (int k = 0; k < 2; ++k) {
        Grid2<double> dx(3, 2), dy(3, 2);
        for (std::size_t i = 0; i < dx.size(); ++i) {
            dx[i] = 0.5 * static_cast<double>(k + 1) * static_cast<double>(i);
            dy[i] = -0.25 * static_cast<double>(i);
        }
        ff.dx.push_back(dx);
        ff.dy.push_back(dy);
    }
    std::string path = scratch_path("flow.toft");
    write_flow_field(path, ff, 2);
    auto [back, reference] = read_flow_field(path);
    CHECK(reference == 2);
    REQUIRE(back.n_fields() == 2);
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < ff.dx[k].size(); ++i) {
            CHECK(back.dx[k][i] == ff.dx[k][i]);
            CHECK(back.dy[k][i] == ff.dy[k][i]);
        }
}

TEST_CASE("kernel maps round trip for both kinds") {
    KernelMap cross;
    cross.kind = KernelKind::CrossChannel;
    cross.w = Tensor3<double>(4, 2, 2);
    for (std::size_t i = 0; i < cross.w.size(); ++i)
        cross.w[i] = 0.0625 * static_cast<double>(i);
    std::string path = scratch_path("kern_cross.toft");
    write_kernel_map(path, cross);
    KernelMap back = read_kernel_map(path);
    CHECK(back.kind == KernelKind::CrossChannel);
    for (std::size_t i = 0; i < cross.w.size(); ++i) CHECK(back.w[i] == cross.w[i]);

    KernelMap spatial;
    spatial.kind = KernelKind::Spatial;
    spatial.k = 3;
    spatial.w = Tensor3<double>(9, 2, 2, 1.0 / 16.0);
    std::string path2 = scratch_path("kern_spatial.toft");
    write_kernel_map(path2, spatial);
    KernelMap back2 = read_kernel_map(path2);
    CHECK(back2.kind == KernelKind::Spatial);
    CHECK(back2.k == 3);
    for (std::size_t i = 0; i < spatial.w.size(); ++i) CHECK(back2.w[i] == spatial.w[i]);
}

TEST_CASE("the container header is little-endian and byte-stable") {
    Grid2<double> g(2, 3);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 1.0;
    std::string path = scratch_path("golden.toft");
    write_grid(path, g, TensorKind::Depth);
    std::string b = read_bytes(path);

    REQUIRE(b.size() == 4 + 2 + 2 + 4 + 8 + 4 + 24);
    CHECK(b.substr(0, 4) == "TOFT");
    auto u16at = [&](std::size_t p) {
        return static_cast<unsigned>(static_cast<unsigned char>(b[p])) |
               (static_cast<unsigned>(static_cast<unsigned char>(b[p + 1])) << 8);
    };
    auto u32at = [&](std::size_t p) {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | static_cast<unsigned char>(b[p + i]);
        return v;
    };
    CHECK(u16at(4) == 1);  // version
    CHECK(u16at(6) == 3);  // TensorKind::Depth
    CHECK(u32at(8) == 2);  // ndim
    CHECK(u32at(12) == 2); // dims[0]
    CHECK(u32at(16) == 3); // dims[1]
    CHECK(u32at(20) == 0); // extension length
    // float32 1.0 little-endian
    CHECK(static_cast<unsigned char>(b[24]) == 0x00);
    CHECK(static_cast<unsigned char>(b[25]) == 0x00);
    CHECK(static_cast<unsigned char>(b[26]) == 0x80);
    CHECK(static_cast<unsigned char>(b[27]) == 0x3f);

    // Writing the same grid again produces identical bytes.
    std::string path2 = scratch_path("golden2.toft");
    write_grid(path2, g, TensorKind::Depth);
    CHECK(read_bytes(path2) == b);
}

TEST_CASE("corrupt and malformed containers raise IoError") {
    CHECK_THROWS_AS(read_grid(scratch_path("does_not_exist.toft"), TensorKind::Depth),
                    IoError);

    std::string bad_magic = scratch_path("bad_magic.toft");
    write_bytes(bad_magic, "JUNKJUNKJUNKJUNK");
    CHECK_THROWS_AS(read_grid(bad_magic, TensorKind::Depth), IoError);

    std::string bad_version;
    bad_version += "TOFT";
    append_u16(bad_version, 2);
    append_u16(bad_version, 3);
    append_u32(bad_version, 0);
    append_u32(bad_version, 0);
    std::string bv = scratch_path("bad_version.toft");
    write_bytes(bv, bad_version);
    CHECK_THROWS_AS(read_grid(bv, TensorKind::Depth), IoError);

    std::string deep;
    deep += "TOFT";
    append_u16(deep, 1);
    append_u16(deep, 0);
    append_u32(deep, 9); // ndim too large
    std::string dp = scratch_path("deep.toft");
    write_bytes(dp, deep);
    CHECK_THROWS_AS(read_grid(dp, TensorKind::Generic), IoError);

    Grid2<double> g(2, 2, 1.0);
    std::string trunc = scratch_path("trunc.toft");
    write_grid(trunc, g, TensorKind::Depth);
    std::string whole = read_bytes(trunc);
    write_bytes(trunc, whole.substr(0, whole.size() - 4));
    CHECK_THROWS_AS(read_grid(trunc, TensorKind::Depth), IoError);

    std::string padded = scratch_path("padded.toft");
    write_bytes(padded, whole + std::string(3, '\0'));
    CHECK_THROWS_AS(read_grid(padded, TensorKind::Depth), IoError);

    std::string short_ext;
    short_ext += "TOFT";
    append_u16(short_ext, 1);
    append_u16(short_ext, 3);
    append_u32(short_ext, 1);
    append_u32(short_ext, 1);
    append_u32(short_ext, 64); // claims 64 bytes of extension, provides none
    std::string se = scratch_path("short_ext.toft");
    write_bytes(se, short_ext);
    CHECK_THROWS_AS(read_grid(se, TensorKind::Depth), IoError);
}

TEST_CASE("typed readers demand complete metadata") {
    SceneResponse sr;
    sr.a = Tensor3<double>(4, 1, 1, 0.0);
    sr.dtau = 5e-11;
    std::string path = scratch_path("no_dtau.toft");
    {
        std::vector<float> data(4, 0.0f);
        nlohmann::json ext = {{"t0", 0.0}}; // dtau missing
        write_tensor(path, TensorKind::SceneResponseData, {4, 1, 1}, data, ext);
    }
    CHECK_THROWS_AS(read_scene_response(path), IoError);

    std::string frames = scratch_path("no_channels.toft");
    {
        std::vector<float> data(4, 0.0f);
        write_tensor(frames, TensorKind::RawFramesData, {4, 1, 1}, data, nullptr);
    }
    CHECK_THROWS_AS(read_raw_frames(frames), IoError);
}
