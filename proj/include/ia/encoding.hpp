#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ia/grid.hpp"

namespace ia {

/// Sinusoidal positional-encoding configuration. Angular speeds form a
/// geometric progression from 2*pi to 100*pi over D bands; T is kept as a
/// configuration constant. The encoding of a 2-vector has dimension 4*D.
struct EncodingConfig {
    int bands = 1;      // D
    double T = 0.01;

    explicit EncodingConfig(int D = 1) : bands(D) {
        if (D < 1) throw std::invalid_argument("EncodingConfig: D must be >= 1");
    }

    int dim() const { return 4 * bands; }

    // omega_k = 2*pi * 50^(k/(D-1)); omega_0 = 2*pi when D == 1.
    double omega(int k) const {
        if (bands == 1) return 2.0 * M_PI;
        return 2.0 * M_PI * std::pow(50.0, static_cast<double>(k) / (bands - 1));
    }
};

/// Integral window anchor plus decimal sub-pixel residue of a displacement.
/// z = floor(delta) componentwise, d = delta - z in [0,1).
struct OffsetParts {
    int zx = 0;
    int zy = 0;
    float dx = 0.0f;
    float dy = 0.0f;
};

inline OffsetParts decompose_offset(float delta_x, float delta_y) {
    OffsetParts p;
    p.zx = static_cast<int>(std::floor(delta_x));
    p.zy = static_cast<int>(std::floor(delta_y));
    p.dx = delta_x - static_cast<float>(p.zx);
    p.dy = delta_y - static_cast<float>(p.zy);
    // Float rounding can push a decimal of a tiny negative input up to 1.
    if (p.dx >= 1.0f) { p.zx += 1; p.dx = 0.0f; }
    if (p.dy >= 1.0f) { p.zy += 1; p.dy = 0.0f; }
    return p;
}

/// gamma(p): per band k, [sin(w_k px), sin(w_k py), cos(w_k px), cos(w_k py)],
/// concatenated over bands. Squared norm is exactly 2*D for any p.
inline void positional_encoding(double px, double py, const EncodingConfig& config, double* out) {
    for (int k = 0; k < config.bands; ++k) {
        double w = config.omega(k);
        out[4 * k + 0] = std::sin(w * px);
        out[4 * k + 1] = std::sin(w * py);
        out[4 * k + 2] = std::cos(w * px);
        out[4 * k + 3] = std::cos(w * py);
    }
}

inline std::vector<double> positional_encoding(double px, double py, const EncodingConfig& config) {
    std::vector<double> out(config.dim());
    positional_encoding(px, py, config, out.data());
    return out;
}

/// Additive fusion x + gamma(p). Requires the feature dimension to equal the
/// encoding dimension 4*D.
inline std::vector<double> encode_feature(const std::vector<double>& x, double px, double py,
                                          const EncodingConfig& config) {
    if (static_cast<int>(x.size()) != config.dim())
        throw std::invalid_argument("encode_feature: feature dim " + std::to_string(x.size()) +
                                    " != encoding dim " + std::to_string(config.dim()));
    std::vector<double> out = positional_encoding(px, py, config);
    for (size_t i = 0; i < x.size(); ++i) out[i] += x[i];
    return out;
}

}  // namespace ia
