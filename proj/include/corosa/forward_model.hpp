#pragma once

#include <iostream>
#include <variant>

#include "corosa/fft.hpp"
#include "corosa/ops.hpp"
#include "corosa/rng.hpp"

namespace corosa {

/// Measurement operator H: periodic convolution with a PSF, or sampling of
/// the unitary 2D DFT on a binary k-space mask.
struct ForwardModel {
    struct Convolution {
        StencilKernel psf;
    };
    struct FourierMask {
        ImageGrid mask;  // entries in {0,1}
    };
    std::variant<Convolution, FourierMask> variant;

    static ForwardModel convolution(StencilKernel psf) {
        if (!(psf.tap_sum() > 0)) throw std::invalid_argument("ForwardModel: psf tap sum must be positive");
        return {Convolution{std::move(psf)}};
    }
    static ForwardModel fourier(ImageGrid mask) {
        bool any = false;
        for (double v : mask.data) {
            if (v != 0.0 && v != 1.0) throw std::invalid_argument("ForwardModel: mask entries must be 0/1");
            any = any || v == 1.0;
        }
        if (!any) throw std::invalid_argument("ForwardModel: mask has no samples");
        return {FourierMask{std::move(mask)}};
    }

    bool is_fourier() const { return std::holds_alternative<FourierMask>(variant); }
    const StencilKernel& psf() const { return std::get<Convolution>(variant).psf; }
    const ImageGrid& mask() const { return std::get<FourierMask>(variant).mask; }
};

struct MixedPoissonGaussian {
    double gamma_p;   // photon scale
    double sigma_eta; // AWGN std
};

struct CalibratedComplexGaussian {
    double target_psnr_db;
};

using NoiseSpec = std::variant<MixedPoissonGaussian, CalibratedComplexGaussian>;

inline StencilKernel make_gaussian_psf(double sigma, int radius) {
    if (!(sigma > 0)) throw std::invalid_argument("make_gaussian_psf: sigma must be positive");
    if (radius < 1) throw std::invalid_argument("make_gaussian_psf: radius must be >= 1");
    if (radius < 2 * sigma)
        std::cerr << "warning: gaussian psf radius " << radius << " < 2*sigma, kernel is truncated\n";
    int n = 2 * radius + 1;
    StencilKernel k(n, n, radius, radius);
    double sum = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double dy = r - radius, dx = c - radius;
            double v = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            k.tap(r, c) = v;
            sum += v;
        }
    for (double& t : k.taps) t /= sum;
    return k;
}

/// m = Poisson[gamma_p (h*s)] + N(0, sigma_eta^2), drawn pixel by pixel in
/// row-major order from one seeded generator.
inline ImageGrid tirf_simulate(const ImageGrid& s, const StencilKernel& psf,
                               const MixedPoissonGaussian& noise, uint64_t seed) {
    if (!(noise.gamma_p > 0)) throw std::invalid_argument("tirf_simulate: gamma_p must be positive");
    if (noise.sigma_eta < 0) throw std::invalid_argument("tirf_simulate: sigma_eta must be >= 0");
    ImageGrid blurred = conv2_periodic(s, psf);
    std::mt19937_64 rng = make_rng(seed, 0);
    ImageGrid m(s.width, s.height);
    for (size_t i = 0; i < m.size(); ++i) {
        double mean = noise.gamma_p * blurred.data[i];
        if (mean < 0) {
            if (mean < -1e-9) throw std::logic_error("tirf_simulate: negative blurred mean");
            mean = 0;  // roundoff from a nonnegative input
        }
        double count = 0;
        if (mean > 0) {
            std::poisson_distribution<long long> pois(mean);
            count = double(pois(rng));
        }
        if (noise.sigma_eta > 0) {
            std::normal_distribution<double> gauss(0.0, noise.sigma_eta);
            count += gauss(rng);
        }
        m.data[i] = count;
    }
    return m;
}

enum class MaskKind { VariableDensityRandom, SpiralWithCenterFill };

namespace detail {

inline double kspace_radius(int x, int y, int w, int h) {
    double fx = std::min(x, w - x);
    double fy = std::min(y, h - y);
    return std::hypot(fx, fy);
}

inline ImageGrid mask_random(int w, int h, int target, uint64_t seed) {
    // variable-density sampling: weight ~ 1/(1 + (r/r0)^3), sampled without
    // replacement via exponential keys (Efraimidis-Spirakis)
    std::mt19937_64 rng = make_rng(seed, 1);
    std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
    double r0 = 0.08 * std::min(w, h);
    std::vector<std::pair<double, int>> keys;
    keys.reserve(size_t(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double r = kspace_radius(x, y, w, h);
            double wgt = 1.0 / (1.0 + std::pow(r / r0, 3.0));
            keys.emplace_back(-std::log(unif(rng)) / wgt, y * w + x);
        }
    std::partial_sort(keys.begin(), keys.begin() + target, keys.end());
    ImageGrid mask(w, h);
    for (int i = 0; i < target; ++i) mask.data[size_t(keys[i].second)] = 1.0;
    return mask;
}

inline ImageGrid mask_spiral(int w, int h, int target) {
    ImageGrid mask(w, h);
    int count = 0;
    auto put = [&](double fx, double fy) {
        int x = wrap(int(std::lround(fx)), w);
        int y = wrap(int(std::lround(fy)), h);
        double& v = mask.at(x, y);
        if (v == 0.0) {
            v = 1.0;
            ++count;
        }
    };
    // fully sampled central disk holding ~20% of the budget
    double r0 = std::sqrt(0.2 * target / M_PI);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (kspace_radius(x, y, w, h) <= r0) {
                mask.at(x, y) = 1.0;
                ++count;
            }
    // Archimedean spiral r = b*theta from the disk outward; pitch b sized so
    // unit arc steps roughly meet the remaining budget, then halved until the
    // budget is reached
    double rmax = 0.5 * std::min(w, h);
    int remaining = target - count;
    if (remaining > 0) {
        double b = (rmax * rmax - r0 * r0) / (2.0 * std::max(1, remaining));
        for (int attempt = 0; attempt < 24 && count < target; ++attempt) {
            double theta = r0 / b;
            while (count < target) {
                double r = b * theta;
                if (r > rmax) break;
                put(r * std::cos(theta), r * std::sin(theta));
                theta += 0.5 / std::max(r, 0.5);  // ~half-pixel arc steps
            }
            b *= 0.5;
        }
    }
    // top up from DC outward if rasterization fell short
    if (count < target) {
        std::vector<std::pair<double, int>> order;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (mask.at(x, y) == 0.0) order.emplace_back(kspace_radius(x, y, w, h), y * w + x);
        std::sort(order.begin(), order.end());
        for (size_t i = 0; count < target && i < order.size(); ++i, ++count)
            mask.data[size_t(order[i].second)] = 1.0;
    }
    return mask;
}

}  // namespace detail

/// Binary k-space mask with round(density * w * h) samples. The spiral
/// variant is deterministic; the random variant is a draw from `seed`.
inline ImageGrid make_mask(MaskKind kind, int w, int h, double density, uint64_t seed) {
    if (!(density > 0) || density > 1) throw std::invalid_argument("make_mask: density outside (0,1]");
    int target = int(std::lround(density * double(w) * double(h)));
    target = std::max(1, std::min(target, w * h));
    if (kind == MaskKind::VariableDensityRandom) return detail::mask_random(w, h, target, seed);
    return detail::mask_spiral(w, h, target);
}

/// m_hat = mask .* (F s + eta_hat), unitary DFT, with per-component noise std
/// sigma = peak(s) 10^(-PSNR/20)/sqrt(2) so the fully sampled inverse
/// transform attains the target PSNR.
inline ComplexGrid mri_simulate(const ImageGrid& s, const ImageGrid& mask,
                                const CalibratedComplexGaussian& noise, uint64_t seed) {
    if (!s.same_dims(mask)) throw std::invalid_argument("mri_simulate: mask dimension mismatch");
    double peak = max_value(s);
    double sigma = peak * std::pow(10.0, -noise.target_psnr_db / 20.0) / std::sqrt(2.0);
    ComplexGrid spec = fft2(s);
    std::mt19937_64 rng = make_rng(seed, 2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ComplexGrid m(s.width, s.height);
    for (size_t i = 0; i < m.size(); ++i) {
        double re = gauss(rng), im = gauss(rng);
        m.data[i] = mask.data[i] != 0.0 ? spec.data[i] + sigma * std::complex<double>(re, im)
                                        : std::complex<double>(0.0, 0.0);
    }
    return m;
}

// ---- H and H^T ----

using Measurement = std::variant<ImageGrid, ComplexGrid>;

inline Measurement apply_H(const ImageGrid& s, const ForwardModel& model) {
    if (model.is_fourier()) {
        ComplexGrid spec = fft2(s);
        const ImageGrid& mask = model.mask();
        if (mask.width != s.width || mask.height != s.height)
            throw std::invalid_argument("apply_H: mask dimension mismatch");
        for (size_t i = 0; i < spec.size(); ++i) spec.data[i] *= mask.data[i];
        return spec;
    }
    return conv2_periodic(s, model.psf());
}

inline ImageGrid apply_Ht(const Measurement& y, const ForwardModel& model) {
    if (model.is_fourier()) {
        ComplexGrid masked = std::get<ComplexGrid>(y);
        const ImageGrid& mask = model.mask();
        for (size_t i = 0; i < masked.size(); ++i) masked.data[i] *= mask.data[i];
        return ifft2(masked).real_part();
    }
    return conv2_periodic(std::get<ImageGrid>(y), kernel_flip(model.psf()));
}

/// Cached spectral form of H used inside solvers: H^T H and H^T m as whole-
/// image maps, plus the residual norm ||H s - m||^2. For the convolution
/// variant this is the same periodic convolution evaluated in the DFT domain.
class DataTerm {
public:
    DataTerm(const ForwardModel& model, Measurement m) : model_(model) {
        if (model.is_fourier()) {
            mhat_ = std::get<ComplexGrid>(std::move(m));
            const ImageGrid& mask = model_.mask();
            if (mask.width != mhat_.width || mask.height != mhat_.height)
                throw std::invalid_argument("DataTerm: mask and measurement dimensions differ");
            for (size_t i = 0; i < mhat_.size(); ++i) mhat_.data[i] *= mask.data[i];
            width_ = mhat_.width;
            height_ = mhat_.height;
        } else {
            ImageGrid mg = std::get<ImageGrid>(std::move(m));
            width_ = mg.width;
            height_ = mg.height;
            psf_hat_ = fft2(kernel_to_periodic_image(model.psf(), width_, height_));
            // unitary DFT of the kernel; undo the 1/sqrt(N) so psf_hat is the
            // plain frequency response
            double n = std::sqrt(double(psf_hat_.size()));
            for (auto& z : psf_hat_.data) z *= n;
            m_ = std::move(mg);
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    const ForwardModel& model() const { return model_; }

    /// H^T H x
    ImageGrid normal_apply(const ImageGrid& x) const {
        ComplexGrid spec = fft2(x);
        if (model_.is_fourier()) {
            const ImageGrid& mask = model_.mask();
            for (size_t i = 0; i < spec.size(); ++i) spec.data[i] *= mask.data[i];
        } else {
            for (size_t i = 0; i < spec.size(); ++i) spec.data[i] *= std::norm(psf_hat_.data[i]);
        }
        return ifft2(spec).real_part();
    }

    /// H^T m
    ImageGrid data_rhs() const {
        if (model_.is_fourier()) {
            ComplexGrid spec = mhat_;
            return ifft2(spec).real_part();
        }
        ComplexGrid spec = fft2(m_);
        for (size_t i = 0; i < spec.size(); ++i) spec.data[i] *= std::conj(psf_hat_.data[i]);
        return ifft2(spec).real_part();
    }

    /// ||H x - m||^2 (complex modulus for the Fourier variant)
    double residual_sq(const ImageGrid& x) const {
        ComplexGrid spec = fft2(x);
        double s = 0;
        if (model_.is_fourier()) {
            const ImageGrid& mask = model_.mask();
            for (size_t i = 0; i < spec.size(); ++i)
                s += std::norm(mask.data[i] * spec.data[i] - mhat_.data[i]);
        } else {
            for (size_t i = 0; i < spec.size(); ++i) spec.data[i] *= psf_hat_.data[i];
            ImageGrid hx = ifft2(spec).real_part();
            for (size_t i = 0; i < hx.size(); ++i) {
                double r = hx.data[i] - m_.data[i];
                s += r * r;
            }
        }
        return s;
    }

    /// Zero-filled / blurred baseline H^T m, the conventional first estimate.
    ImageGrid baseline() const {
        if (model_.is_fourier()) return data_rhs();
        return m_;
    }

private:
    ForwardModel model_;
    ImageGrid m_;        // convolution measurement
    ComplexGrid mhat_;   // masked k-space measurement
    ComplexGrid psf_hat_;
    int width_ = 0, height_ = 0;
};

}  // namespace corosa
