#pragma once

#include <cstdint>
#include <random>

namespace ia {

/// Deterministic uniform draws on top of mt19937. Distributions are mapped
/// explicitly (not via std::uniform_real_distribution, whose output is
/// implementation-defined), so streams are reproducible across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

    // Uniform in [0, 1).
    double uniform() { return engine_() * (1.0 / 4294967296.0); }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    uint32_t next_u32() { return engine_(); }

private:
    std::mt19937 engine_;
};

}  // namespace ia
