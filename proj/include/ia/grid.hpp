#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ia {

// Coordinate convention used across the library: x indexes columns in
// [0, W-1], y indexes rows in [0, H-1]. Integer coordinates land exactly on
// sample locations (no half-pixel offset).
struct ContinuousCoord {
    double x = 0.0;  // column position
    double y = 0.0;  // row position
};

/// Dense H x W x C float32 grid, row-major, indexed [y][x][c].
/// Serves both images (values in [0,1]) and feature maps (unconstrained).
class Grid {
public:
    Grid() = default;

    Grid(int height, int width, int channels, float fill = 0.0f)
        : height_(height), width_(width), channels_(channels) {
        if (height < 1 || width < 1 || channels < 1)
            throw std::invalid_argument("Grid: dimensions must be >= 1");
        data_.assign(static_cast<size_t>(height) * width * channels, fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }

    float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

    float* row(int y) { return data_.data() + static_cast<size_t>(y) * width_ * channels_; }
    const float* row(int y) const { return data_.data() + static_cast<size_t>(y) * width_ * channels_; }

    // Pointer to the C values of pixel (y, x).
    float* pixel(int y, int x) { return data_.data() + index(y, x, 0); }
    const float* pixel(int y, int x) const { return data_.data() + index(y, x, 0); }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool same_shape(const Grid& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    bool all_finite() const {
        for (float v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    size_t index(int y, int x, int c) const {
        return (static_cast<size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Per-pixel displacement field. u is the x (column) displacement, v the
/// y (row) displacement, both in pixels. Same spatial shape as the grid it
/// displaces.
class FlowField {
public:
    FlowField() = default;

    FlowField(int height, int width, float u0 = 0.0f, float v0 = 0.0f)
        : height_(height), width_(width) {
        if (height < 1 || width < 1)
            throw std::invalid_argument("FlowField: dimensions must be >= 1");
        u_.assign(static_cast<size_t>(height) * width, u0);
        v_.assign(static_cast<size_t>(height) * width, v0);
    }

    int height() const { return height_; }
    int width() const { return width_; }

    float& u(int y, int x) { return u_[idx(y, x)]; }
    float u(int y, int x) const { return u_[idx(y, x)]; }
    float& v(int y, int x) { return v_[idx(y, x)]; }
    float v(int y, int x) const { return v_[idx(y, x)]; }

    std::vector<float>& u_data() { return u_; }
    const std::vector<float>& u_data() const { return u_; }
    std::vector<float>& v_data() { return v_; }
    const std::vector<float>& v_data() const { return v_; }

    bool matches(const Grid& g) const {
        return height_ == g.height() && width_ == g.width();
    }

    bool all_finite() const {
        for (float x : u_)
            if (!std::isfinite(x)) return false;
        for (float x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    size_t idx(int y, int x) const { return static_cast<size_t>(y) * width_ + x; }

    int height_ = 0;
    int width_ = 0;
    std::vector<float> u_;
    std::vector<float> v_;
};

}  // namespace ia
