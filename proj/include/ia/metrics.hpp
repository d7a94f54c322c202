#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ia/grid.hpp"

namespace ia {

/// 10*log10(peak^2 / MSE). Identical grids (MSE 0) return +infinity.
inline double psnr(const Grid& a, const Grid& b, double peak = 1.0) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
    if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be positive");
    double mse = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) {
        double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(a.data().size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
/// mean over fully-interior window positions, averaged over channels.
inline double ssim(const Grid& a, const Grid& b, double peak = 1.0) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    if (a.height() < kWindow || a.width() < kWindow)
        throw std::invalid_argument("ssim: grid smaller than the 11x11 window");

    double weights[kWindow][kWindow];
    double wsum = 0.0;
    for (int j = 0; j < kWindow; ++j)
        for (int i = 0; i < kWindow; ++i) {
            double dy = j - kWindow / 2;
            double dx = i - kWindow / 2;
            weights[j][i] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            wsum += weights[j][i];
        }
    for (auto& row : weights)
        for (double& w : row) w /= wsum;

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        double acc = 0.0;
        int count = 0;
        for (int y = 0; y + kWindow <= a.height(); ++y) {
            for (int x = 0; x + kWindow <= a.width(); ++x) {
                double mu_a = 0.0, mu_b = 0.0;
                for (int j = 0; j < kWindow; ++j)
                    for (int i = 0; i < kWindow; ++i) {
                        mu_a += weights[j][i] * a.at(y + j, x + i, c);
                        mu_b += weights[j][i] * b.at(y + j, x + i, c);
                    }
                double var_a = 0.0, var_b = 0.0, cov = 0.0;
                for (int j = 0; j < kWindow; ++j)
                    for (int i = 0; i < kWindow; ++i) {
                        double da = a.at(y + j, x + i, c) - mu_a;
                        double db = b.at(y + j, x + i, c) - mu_b;
                        var_a += weights[j][i] * da * da;
                        var_b += weights[j][i] * db * db;
                        cov += weights[j][i] * da * db;
                    }
                acc += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                       ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                ++count;
            }
        }
        total += acc / count;
    }
    return total / a.channels();
}

}  // namespace ia
