// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// Part of tofsim, a simulation and depth-reconstruction toolkit for
// amplitude-modulated continuous-wave (AMCW) time-of-flight cameras.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tof/common.hpp"

namespace tof {

// Dense row-major 2-D array. x indexes rows (vertical axis), y indexes
// columns (horizontal axis); the horizontal field of view spans y.
template <typename T>
class Grid2 {
  public:
    Grid2() = default;
    Grid2(int nx, int ny, T fill = T{})
        : nx_(nx), ny_(ny), v_(check_size(nx, ny), fill) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    bool empty() const { return v_.empty(); }
    std::size_t size() const { return v_.size(); }

    T& operator()(int x, int y) { return v_[idx(x, y)]; }
    const T& operator()(int x, int y) const { return v_[idx(x, y)]; }
    T& operator[](std::size_t i) { return v_[i]; }
    const T& operator[](std::size_t i) const { return v_[i]; }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    auto begin() { return v_.begin(); }
    auto end() { return v_.end(); }
    auto begin() const { return v_.begin(); }
    auto end() const { return v_.end(); }

    bool same_shape(const Grid2& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }

  private:
    static std::size_t check_size(int nx, int ny) {
        if (nx < 0 || ny < 0) throw ConfigError("Grid2: negative dimension");
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    }
    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(x) * ny_ + static_cast<std::size_t>(y);
    }

    int nx_ = 0, ny_ = 0;
    std::vector<T> v_;
};

// Dense row-major 3-D array with the slowest axis first. Axis 0 is the time
// bin or channel index; axes 1 and 2 are the image rows and columns.
template <typename T>
class Tensor3 {
  public:
    Tensor3() = default;
    Tensor3(int n0, int nx, int ny, T fill = T{})
        : n0_(n0), nx_(nx), ny_(ny), v_(check_size(n0, nx, ny), fill) {}

    int n0() const { return n0_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    bool empty() const { return v_.empty(); }
    std::size_t size() const { return v_.size(); }
    std::size_t plane_size() const {
        return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
    }

    T& operator()(int k, int x, int y) { return v_[idx(k, x, y)]; }
    const T& operator()(int k, int x, int y) const { return v_[idx(k, x, y)]; }
    T& operator[](std::size_t i) { return v_[i]; }
    const T& operator[](std::size_t i) const { return v_[i]; }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    T* plane(int k) { return v_.data() + static_cast<std::size_t>(k) * plane_size(); }
    const T* plane(int k) const { return v_.data() + static_cast<std::size_t>(k) * plane_size(); }

    bool same_shape(const Tensor3& o) const {
        return n0_ == o.n0_ && nx_ == o.nx_ && ny_ == o.ny_;
    }

  private:
    static std::size_t check_size(int n0, int nx, int ny) {
        if (n0 < 0 || nx < 0 || ny < 0) throw ConfigError("Tensor3: negative dimension");
        return static_cast<std::size_t>(n0) * static_cast<std::size_t>(nx) *
               static_cast<std::size_t>(ny);
    }
    std::size_t idx(int k, int x, int y) const {
        return (static_cast<std::size_t>(k) * nx_ + static_cast<std::size_t>(x)) * ny_ +
               static_cast<std::size_t>(y);
    }

    int n0_ = 0, nx_ = 0, ny_ = 0;
    std::vector<T> v_;
};

// Per-pixel validity. Nonzero = valid.
using Mask = Grid2<std::uint8_t>;

inline std::size_t count_valid(const Mask& m) {
    std::size_t n = 0;
    for (auto v : m) n += (v != 0);
    return n;
}

// Bilinear sample of g at fractional position (x, y). Out-of-bounds positions
// (outside the centered pixel lattice) return 0 and clear *inside.
template <typename T>
double bilinear(const Grid2<T>& g, double x, double y, bool* inside = nullptr) {
    if (!(x >= 0.0) || !(y >= 0.0) || !(x <= g.nx() - 1.0) || !(y <= g.ny() - 1.0)) {
        if (inside) *inside = false;
        return 0.0;
    }
    if (inside) *inside = true;
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    if (x0 > g.nx() - 2) x0 = g.nx() - 2;
    if (y0 > g.ny() - 2) y0 = g.ny() - 2;
    if (x0 < 0) x0 = 0; // single-row/column grids land here via the bounds test
    if (y0 < 0) y0 = 0;
    int x1 = std::min(x0 + 1, g.nx() - 1);
    int y1 = std::min(y0 + 1, g.ny() - 1);
    double fx = x - x0;
    double fy = y - y0;
    double v00 = static_cast<double>(g(x0, y0));
    double v01 = static_cast<double>(g(x0, y1));
    double v10 = static_cast<double>(g(x1, y0));
    double v11 = static_cast<double>(g(x1, y1));
    return v00 * (1 - fx) * (1 - fy) + v01 * (1 - fx) * fy + v10 * fx * (1 - fy) +
           v11 * fx * fy;
}

} // namespace tof
