#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ia/config.hpp"
#include "ia/grid.hpp"
#include "ia/rng.hpp"
#include "ia/train.hpp"

namespace ia {

/// One 2-D sinusoid: amplitude * sin(2*pi*(fx*x + fy*y) + phase).
/// Frequencies are in cycles/pixel and must stay strictly below Nyquist.
struct SinusoidComponent {
    double amplitude = 1.0;
    double freq_x = 0.0;
    double freq_y = 0.0;
    double phase = 0.0;
};

/// Band-limited scene evaluable exactly at any continuous coordinate:
/// explicit per-channel sinusoids plus an optional seeded random field
/// (materialized as extra sinusoids below the stated cutoff).
struct AnalyticImage {
    int channels = 1;
    std::vector<std::vector<SinusoidComponent>> components;  // per channel
    int noise_components = 0;       // per channel
    double noise_cutoff = 0.4;      // cycles/pixel, strictly < 0.5
    double noise_amplitude = 0.0;
    uint64_t seed = 0;              // default seed for the random field

    void validate() const {
        if (channels < 1) throw std::invalid_argument("AnalyticImage: channels must be >= 1");
        if (static_cast<int>(components.size()) != channels)
            throw std::invalid_argument("AnalyticImage: one component list per channel required");
        for (const auto& list : components)
            for (const auto& comp : list)
                if (std::abs(comp.freq_x) >= 0.5 || std::abs(comp.freq_y) >= 0.5)
                    throw std::invalid_argument("AnalyticImage: component frequency at or above Nyquist");
        if (noise_components < 0)
            throw std::invalid_argument("AnalyticImage: noise_components must be >= 0");
        if (noise_components > 0 && (noise_cutoff <= 0.0 || noise_cutoff >= 0.5))
            throw std::invalid_argument("AnalyticImage: noise cutoff must lie in (0, 0.5)");
    }

    // All components, with the seeded random field materialized.
    std::vector<std::vector<SinusoidComponent>> materialize(uint64_t field_seed) const {
        validate();
        auto all = components;
        if (noise_components > 0) {
            Rng rng(field_seed);
            for (int c = 0; c < channels; ++c) {
                for (int k = 0; k < noise_components; ++k) {
                    SinusoidComponent comp;
                    comp.freq_x = rng.uniform(-noise_cutoff, noise_cutoff);
                    comp.freq_y = rng.uniform(-noise_cutoff, noise_cutoff);
                    comp.phase = rng.uniform(0.0, 2.0 * M_PI);
                    comp.amplitude = noise_amplitude * rng.uniform(0.25, 1.0);
                    all[c].push_back(comp);
                }
            }
        }
        return all;
    }
};

namespace detail {

inline double eval_components(const std::vector<SinusoidComponent>& list, double x, double y) {
    double acc = 0.0;
    for (const auto& c : list)
        acc += c.amplitude * std::sin(2.0 * M_PI * (c.freq_x * x + c.freq_y * y) + c.phase);
    return acc;
}

}  // namespace detail

/// Exact evaluation of the shifted scene on the pixel lattice:
/// Grid[y][x][c] = scene_c(x + shift_x, y + shift_y). No resampling involved.
inline Grid render(const AnalyticImage& image, int height, int width, double shift_x,
                   double shift_y, uint64_t seed) {
    auto all = image.materialize(seed);
    Grid grid(height, width, image.channels);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            float* px = grid.pixel(y, x);
            for (int c = 0; c < image.channels; ++c)
                px[c] = static_cast<float>(
                    detail::eval_components(all[c], x + shift_x, y + shift_y));
        }
    }
    return grid;
}

inline Grid render(const AnalyticImage& image, int height, int width, double shift_x = 0.0,
                   double shift_y = 0.0) {
    return render(image, height, width, shift_x, shift_y, image.seed);
}

/// Builds an alignment instance with analytically exact ground truth:
/// reference is the unshifted render, current the shifted one, flow the
/// constant (shift_x, shift_y) field. Backward-warping the reference by the
/// flow reproduces current exactly in the continuum, so target = current.
inline AlignInstance make_pair(const AnalyticImage& image, int height, int width, double shift_x,
                               double shift_y, uint64_t seed) {
    if (std::abs(shift_x) >= std::min(height, width) / 4.0 ||
        std::abs(shift_y) >= std::min(height, width) / 4.0)
        throw std::invalid_argument("make_pair: |shift| must stay below min(H,W)/4");
    AlignInstance inst;
    inst.reference = render(image, height, width, 0.0, 0.0, seed);
    inst.current = render(image, height, width, shift_x, shift_y, seed);
    inst.flow = FlowField(height, width, static_cast<float>(shift_x), static_cast<float>(shift_y));
    inst.target = inst.current;
    return inst;
}

/// Canonical study scene: every channel carries one sinusoid at (fx, fy)
/// with phases spread over the circle, so channel pairs span quadrature and
/// sub-pixel values are linearly recoverable from lattice samples.
inline AnalyticImage make_sinusoid_scene(int channels, double freq_x, double freq_y,
                                         uint64_t seed = 0) {
    AnalyticImage img;
    img.channels = channels;
    img.seed = seed;
    img.components.resize(channels);
    Rng rng(seed);
    double phase0 = rng.uniform(0.0, 2.0 * M_PI);
    for (int c = 0; c < channels; ++c) {
        SinusoidComponent comp;
        comp.amplitude = 1.0;
        comp.freq_x = freq_x;
        comp.freq_y = freq_y;
        comp.phase = phase0 + 2.0 * M_PI * c / channels;
        img.components[c].push_back(comp);
    }
    img.validate();
    return img;
}

// ---------------------------------------------------------------------------
// Scene spec file: [scene] section with channels, seed, one `component =
// channel, amplitude, freq_x, freq_y, phase` line per sinusoid, and optional
// noise_components / noise_cutoff / noise_amplitude keys.

inline AnalyticImage load_scene(const std::string& path) {
    Config cfg = Config::parse_file(path);
    AnalyticImage img;
    img.channels = cfg.get_int_or("scene", "channels", 1);
    img.seed = static_cast<uint64_t>(cfg.get_int_or("scene", "seed", 0));
    img.noise_components = cfg.get_int_or("scene", "noise_components", 0);
    img.noise_cutoff = cfg.get_double_or("scene", "noise_cutoff", 0.4);
    img.noise_amplitude = cfg.get_double_or("scene", "noise_amplitude", 0.0);
    img.components.resize(img.channels);
    for (const auto& line : cfg.get_all("scene", "component")) {
        auto toks = Config::split_list(line);
        if (toks.size() != 5)
            throw std::runtime_error("scene: " + path +
                                     ": component wants 'channel, amplitude, freq_x, freq_y, phase'");
        int channel = static_cast<int>(std::stol(toks[0]));
        if (channel < 0 || channel >= img.channels)
            throw std::runtime_error("scene: " + path + ": component channel out of range");
        SinusoidComponent comp;
        comp.amplitude = std::stod(toks[1]);
        comp.freq_x = std::stod(toks[2]);
        comp.freq_y = std::stod(toks[3]);
        comp.phase = std::stod(toks[4]);
        img.components[channel].push_back(comp);
    }
    img.validate();
    return img;
}

inline void save_scene(const AnalyticImage& image, const std::string& path) {
    image.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    char buf[160];
    out << "[scene]\n";
    out << "channels = " << image.channels << "\n";
    out << "seed = " << image.seed << "\n";
    for (int c = 0; c < image.channels; ++c) {
        for (const auto& comp : image.components[c]) {
            std::snprintf(buf, sizeof(buf), "component = %d, %.17g, %.17g, %.17g, %.17g\n", c,
                          comp.amplitude, comp.freq_x, comp.freq_y, comp.phase);
            out << buf;
        }
    }
    if (image.noise_components > 0) {
        std::snprintf(buf, sizeof(buf), "noise_components = %d\nnoise_cutoff = %.17g\nnoise_amplitude = %.17g\n",
                      image.noise_components, image.noise_cutoff, image.noise_amplitude);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ia
