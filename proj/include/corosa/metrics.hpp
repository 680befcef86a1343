#pragma once

#include "corosa/ops.hpp"

namespace corosa {

/// SNR = 10 log10(||ref||^2 / ||ref - est||^2), capped at 300 dB.
inline double snr_db(const ImageGrid& ref, const ImageGrid& est) {
    if (!ref.same_dims(est)) throw std::invalid_argument("snr_db: dimension mismatch");
    double sig = norm2_sq(ref);
    if (!(sig > 0)) throw std::invalid_argument("snr_db: reference is all zero");
    double err = 0;
    for (size_t i = 0; i < ref.size(); ++i) {
        double d = ref.data[i] - est.data[i];
        err += d * d;
    }
    if (err == 0) return 300.0;
    return std::min(10.0 * std::log10(sig / err), 300.0);
}

/// Windowed SSIM with the standard parameterization: 11x11 Gaussian window
/// sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1. Inputs are expected in
/// [0, 1]. Window means are taken periodically, consistent with the rest of
/// the library.
inline double ssim(const ImageGrid& ref, const ImageGrid& est) {
    if (!ref.same_dims(est)) throw std::invalid_argument("ssim: dimension mismatch");
    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    StencilKernel win(11, 11, 5, 5);
    double wsum = 0;
    for (int r = 0; r < 11; ++r)
        for (int c = 0; c < 11; ++c) {
            double dy = r - 5, dx = c - 5;
            double v = std::exp(-(dx * dx + dy * dy) / (2 * 1.5 * 1.5));
            win.tap(r, c) = v;
            wsum += v;
        }
    for (double& t : win.taps) t /= wsum;

    ImageGrid xx = ref, yy = est, xy = ref;
    for (size_t i = 0; i < ref.size(); ++i) {
        xx.data[i] = ref.data[i] * ref.data[i];
        yy.data[i] = est.data[i] * est.data[i];
        xy.data[i] = ref.data[i] * est.data[i];
    }
    ImageGrid mu1 = conv2_periodic(ref, win);
    ImageGrid mu2 = conv2_periodic(est, win);
    ImageGrid m11 = conv2_periodic(xx, win);
    ImageGrid m22 = conv2_periodic(yy, win);
    ImageGrid m12 = conv2_periodic(xy, win);

    double acc = 0;
    for (size_t i = 0; i < ref.size(); ++i) {
        double u1 = mu1.data[i], u2 = mu2.data[i];
        double s1 = std::max(m11.data[i] - u1 * u1, 0.0);
        double s2 = std::max(m22.data[i] - u2 * u2, 0.0);
        double s12 = m12.data[i] - u1 * u2;
        acc += ((2 * u1 * u2 + C1) * (2 * s12 + C2)) / ((u1 * u1 + u2 * u2 + C1) * (s1 + s2 + C2));
    }
    return acc / double(ref.size());
}

}  // namespace corosa
