#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ia/grid.hpp"

namespace ia {

enum class BoundaryPolicy { ClampToEdge };

enum class ResampleMethod { Nearest, Bilinear, Bicubic };

inline const char* to_string(ResampleMethod m) {
    switch (m) {
        case ResampleMethod::Nearest: return "nearest";
        case ResampleMethod::Bilinear: return "bilinear";
        case ResampleMethod::Bicubic: return "bicubic";
    }
    return "?";
}

namespace detail {

inline int clamp_index(int i, int n) { return std::min(std::max(i, 0), n - 1); }

// Keys cubic convolution weights for fraction f in [0,1), a = -0.5.
// w3 closes the partition of unity exactly.
inline void keys_weights(double f, double w[4]) {
    constexpr double A = -0.5;
    w[0] = ((A * (f + 1) - 5 * A) * (f + 1) + 8 * A) * (f + 1) - 4 * A;
    w[1] = ((A + 2) * f - (A + 3)) * f * f + 1;
    w[2] = ((A + 2) * (1 - f) - (A + 3)) * (1 - f) * (1 - f) + 1;
    w[3] = 1 - w[0] - w[1] - w[2];
}

}  // namespace detail

/// Value at the lattice point nearest to (a,b); ties broken round-half-up
/// independently per axis. Writes C values to `out`.
inline void sample_nearest(const Grid& grid, double a, double b, float* out,
                           BoundaryPolicy = BoundaryPolicy::ClampToEdge) {
    int x = detail::clamp_index(static_cast<int>(std::floor(a + 0.5)), grid.width());
    int y = detail::clamp_index(static_cast<int>(std::floor(b + 0.5)), grid.height());
    const float* p = grid.pixel(y, x);
    for (int c = 0; c < grid.channels(); ++c) out[c] = p[c];
}

/// Weighted sum of the 4 lattice neighbours; corner (x,y) carries weight
/// (1-|a-x|)*(1-|b-y|). Weights are nonnegative and sum to 1.
inline void sample_bilinear(const Grid& grid, double a, double b, float* out,
                            BoundaryPolicy = BoundaryPolicy::ClampToEdge) {
    int x0 = static_cast<int>(std::floor(a));
    int y0 = static_cast<int>(std::floor(b));
    double fx = a - x0;
    double fy = b - y0;

    int xs[2] = {detail::clamp_index(x0, grid.width()), detail::clamp_index(x0 + 1, grid.width())};
    int ys[2] = {detail::clamp_index(y0, grid.height()), detail::clamp_index(y0 + 1, grid.height())};
    double wx[2] = {1.0 - fx, fx};
    double wy[2] = {1.0 - fy, fy};

    int C = grid.channels();
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i)
                acc += wy[j] * wx[i] * grid.at(ys[j], xs[i], c);
        out[c] = static_cast<float>(acc);
    }
}

/// Keys cubic convolution (a = -0.5) over the 4x4 neighbourhood.
/// Interpolating: reproduces lattice values exactly at integer coordinates,
/// and constants everywhere (kernel partition of unity).
inline void sample_bicubic(const Grid& grid, double a, double b, float* out,
                           BoundaryPolicy = BoundaryPolicy::ClampToEdge) {
    int x0 = static_cast<int>(std::floor(a));
    int y0 = static_cast<int>(std::floor(b));
    double fx = a - x0;
    double fy = b - y0;

    double wx[4], wy[4];
    detail::keys_weights(fx, wx);
    detail::keys_weights(fy, wy);

    int xs[4], ys[4];
    for (int i = 0; i < 4; ++i) {
        xs[i] = detail::clamp_index(x0 - 1 + i, grid.width());
        ys[i] = detail::clamp_index(y0 - 1 + i, grid.height());
    }

    int C = grid.channels();
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) {
            double row = 0.0;
            for (int i = 0; i < 4; ++i) row += wx[i] * grid.at(ys[j], xs[i], c);
            acc += wy[j] * row;
        }
        out[c] = static_cast<float>(acc);
    }
}

inline void sample(const Grid& grid, double a, double b, ResampleMethod method, float* out,
                   BoundaryPolicy boundary = BoundaryPolicy::ClampToEdge) {
    switch (method) {
        case ResampleMethod::Nearest: sample_nearest(grid, a, b, out, boundary); break;
        case ResampleMethod::Bilinear: sample_bilinear(grid, a, b, out, boundary); break;
        case ResampleMethod::Bicubic: sample_bicubic(grid, a, b, out, boundary); break;
    }
}

inline std::vector<float> sample(const Grid& grid, double a, double b, ResampleMethod method,
                                 BoundaryPolicy boundary = BoundaryPolicy::ClampToEdge) {
    std::vector<float> out(grid.channels());
    sample(grid, a, b, method, out.data(), boundary);
    return out;
}

/// Backward warp: output[y][x] = sample(reference, (x + u, y + v)).
inline Grid backward_warp(const Grid& reference, const FlowField& flow, ResampleMethod method,
                          BoundaryPolicy boundary = BoundaryPolicy::ClampToEdge) {
    if (!flow.matches(reference))
        throw std::invalid_argument("backward_warp: flow shape does not match reference");

    Grid out(reference.height(), reference.width(), reference.channels());
    for (int y = 0; y < reference.height(); ++y) {
        for (int x = 0; x < reference.width(); ++x) {
            double a = x + static_cast<double>(flow.u(y, x));
            double b = y + static_cast<double>(flow.v(y, x));
            sample(reference, a, b, method, out.pixel(y, x), boundary);
        }
    }
    return out;
}

}  // namespace ia
