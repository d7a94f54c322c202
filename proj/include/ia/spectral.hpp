#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "ia/grid.hpp"
#include "ia/resample.hpp"

namespace ia {

/// Normalized sinc: sin(pi x) / (pi x), sinc(0) = 1.
inline double sinc(double x) {
    if (x == 0.0) return 1.0;
    double px = M_PI * x;
    return std::sin(px) / px;
}

/// Magnitude of the reconstruction-kernel frequency response at f/f_s.
/// Nearest (box kernel) -> |sinc|, bilinear (triangle kernel) -> sinc^2.
/// No closed form is provided for bicubic.
inline double kernel_response(ResampleMethod method, double f_over_fs) {
    if (f_over_fs < 0.0) throw std::invalid_argument("kernel_response: f/f_s must be >= 0");
    switch (method) {
        case ResampleMethod::Nearest: return std::abs(sinc(f_over_fs));
        case ResampleMethod::Bilinear: {
            double s = sinc(f_over_fs);
            return s * s;
        }
        default: throw std::invalid_argument("kernel_response: unsupported method");
    }
}

/// Exact complex transfer of a fixed sub-pixel shift d in [0,1) applied by
/// the discrete interpolator to a complex exponential of frequency f/f_s.
/// Bilinear blends the two taps; nearest is a pure delay of round(d) samples.
inline std::complex<double> shift_transfer(ResampleMethod method, double shift, double f_over_fs) {
    if (shift < 0.0 || shift >= 1.0)
        throw std::invalid_argument("shift_transfer: shift must be in [0,1)");
    std::complex<double> delay = std::exp(std::complex<double>(0.0, -2.0 * M_PI * f_over_fs));
    switch (method) {
        case ResampleMethod::Bilinear: return (1.0 - shift) + shift * delay;
        case ResampleMethod::Nearest: {
            int n = static_cast<int>(std::floor(shift + 0.5));
            return n == 0 ? std::complex<double>(1.0, 0.0) : delay;
        }
        default: throw std::invalid_argument("shift_transfer: unsupported method");
    }
}

/// Measures the amplitude ratio a fixed-shift resample applies to a unit
/// sinusoid: synthesizes x[n] = sin(2 pi f n), warps it by `shift` with the
/// given method, then fits amplitude by least squares against sin/cos at f,
/// over the interior (4 boundary samples excluded on each side).
inline double measure_attenuation(double signal_freq, double shift, ResampleMethod method,
                                  int length = 256) {
    if (!(signal_freq > 0.0 && signal_freq < 0.5))
        throw std::invalid_argument("measure_attenuation: signal_freq must be in (0, 0.5)");
    if (length < 64) throw std::invalid_argument("measure_attenuation: length must be >= 64");

    Grid signal(1, length, 1);
    for (int n = 0; n < length; ++n)
        signal.at(0, n, 0) = static_cast<float>(std::sin(2.0 * M_PI * signal_freq * n));

    FlowField flow(1, length, static_cast<float>(shift), 0.0f);
    Grid resampled = backward_warp(signal, flow, method);

    // Least-squares fit y[n] ~ A sin(2 pi f n) + B cos(2 pi f n) on the
    // interior; amplitude = hypot(A, B).
    double sss = 0.0, scc = 0.0, ssc = 0.0, ssy = 0.0, scy = 0.0;
    for (int n = 4; n < length - 4; ++n) {
        double s = std::sin(2.0 * M_PI * signal_freq * n);
        double c = std::cos(2.0 * M_PI * signal_freq * n);
        double y = resampled.at(0, n, 0);
        sss += s * s;
        scc += c * c;
        ssc += s * c;
        ssy += s * y;
        scy += c * y;
    }
    double det = sss * scc - ssc * ssc;
    if (std::abs(det) < 1e-12)
        throw std::runtime_error("measure_attenuation: degenerate least-squares fit");
    double A = (scc * ssy - ssc * scy) / det;
    double B = (sss * scy - ssc * ssy) / det;
    return std::hypot(A, B);
}

}  // namespace ia
