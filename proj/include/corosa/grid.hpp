#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace corosa {

// Thrown when an iterative solver fails (CG divergence, NaN iterates).
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

inline int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

/// Real-valued image, row-major, pixel (x, y) at data[y * width + x].
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ImageGrid() = default;
    ImageGrid(int w, int h, double fill = 0.0) : width(w), height(h), data(size_t(w) * h, fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("ImageGrid: dimensions must be positive");
    }

    size_t size() const { return data.size(); }
    double& at(int x, int y) { return data[size_t(y) * width + x]; }
    double at(int x, int y) const { return data[size_t(y) * width + x]; }
    double at_wrap(int x, int y) const { return data[size_t(wrap(y, height)) * width + wrap(x, width)]; }

    bool same_dims(const ImageGrid& o) const { return width == o.width && height == o.height; }
};

/// Complex-valued grid, same layout as ImageGrid.
struct ComplexGrid {
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> data;

    ComplexGrid() = default;
    ComplexGrid(int w, int h) : width(w), height(h), data(size_t(w) * h) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("ComplexGrid: dimensions must be positive");
    }
    explicit ComplexGrid(const ImageGrid& re) : ComplexGrid(re.width, re.height) {
        for (size_t i = 0; i < re.size(); ++i) data[i] = re.data[i];
    }

    size_t size() const { return data.size(); }
    std::complex<double>& at(int x, int y) { return data[size_t(y) * width + x]; }
    std::complex<double> at(int x, int y) const { return data[size_t(y) * width + x]; }

    ImageGrid real_part() const {
        ImageGrid out(width, height);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = data[i].real();
        return out;
    }
};

/// Per-pixel 2-vector (gradients) or 3-vector (hxx, hyy, hxy) field.
struct VectorField {
    std::vector<ImageGrid> ch;

    VectorField() = default;
    VectorField(int w, int h, int channels) {
        if (channels != 2 && channels != 3)
            throw std::invalid_argument("VectorField: channels must be 2 or 3");
        ch.assign(channels, ImageGrid(w, h));
    }
    explicit VectorField(std::vector<ImageGrid> channels) : ch(std::move(channels)) {
        if (ch.size() != 2 && ch.size() != 3)
            throw std::invalid_argument("VectorField: channels must be 2 or 3");
        for (const auto& c : ch)
            if (!c.same_dims(ch[0]))
                throw std::invalid_argument("VectorField: channel dimensions differ");
    }

    int channels() const { return int(ch.size()); }
    int width() const { return ch.empty() ? 0 : ch[0].width; }
    int height() const { return ch.empty() ? 0 : ch[0].height; }
};

/// Small convolution kernel; origin marks the tap multiplying the center sample.
struct StencilKernel {
    int rows = 0, cols = 0;
    int origin_row = 0, origin_col = 0;
    std::vector<double> taps;  // row-major

    StencilKernel() = default;
    StencilKernel(int r, int c, int orow, int ocol)
        : rows(r), cols(c), origin_row(orow), origin_col(ocol), taps(size_t(r) * c, 0.0) {
        if (r <= 0 || c <= 0) throw std::invalid_argument("StencilKernel: empty taps");
        if (orow < 0 || orow >= r || ocol < 0 || ocol >= c)
            throw std::invalid_argument("StencilKernel: origin outside tap extent");
    }

    double& tap(int r, int c) { return taps[size_t(r) * cols + c]; }
    double tap(int r, int c) const { return taps[size_t(r) * cols + c]; }

    double tap_sum() const {
        double s = 0;
        for (double t : taps) s += t;
        return s;
    }
};

// ---- elementwise helpers (deterministic row-major order throughout) ----

inline double dot(const ImageGrid& a, const ImageGrid& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline double norm2_sq(const ImageGrid& a) { return dot(a, a); }
inline double norm2(const ImageGrid& a) { return std::sqrt(norm2_sq(a)); }

inline double norm2_sq(const ComplexGrid& a) {
    double s = 0;
    for (const auto& z : a.data) s += std::norm(z);
    return s;
}

inline double dot(const VectorField& a, const VectorField& b) {
    double s = 0;
    for (int c = 0; c < a.channels(); ++c) s += dot(a.ch[c], b.ch[c]);
    return s;
}

inline double max_abs(const ImageGrid& a) {
    double m = 0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

inline double max_value(const ImageGrid& a) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : a.data) m = std::max(m, v);
    return m;
}

inline ImageGrid clamp(const ImageGrid& a, double lo, double hi) {
    ImageGrid out = a;
    for (double& v : out.data) v = std::clamp(v, lo, hi);
    return out;
}

inline void axpy(double alpha, const ImageGrid& x, ImageGrid& y) {
    for (size_t i = 0; i < x.size(); ++i) y.data[i] += alpha * x.data[i];
}

inline ImageGrid scaled(const ImageGrid& x, double alpha) {
    ImageGrid out = x;
    for (double& v : out.data) v *= alpha;
    return out;
}

inline bool all_finite(const ImageGrid& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

/// Pad to the next multiple of `factor` along both axes by edge replication.
inline ImageGrid pad_to_multiple(const ImageGrid& img, int factor) {
    if (factor <= 1) return img;
    int w = ((img.width + factor - 1) / factor) * factor;
    int h = ((img.height + factor - 1) / factor) * factor;
    if (w == img.width && h == img.height) return img;
    ImageGrid out(w, h);
    for (int y = 0; y < h; ++y) {
        int sy = std::min(y, img.height - 1);
        for (int x = 0; x < w; ++x)
            out.at(x, y) = img.at(std::min(x, img.width - 1), sy);
    }
    return out;
}

inline ImageGrid crop(const ImageGrid& img, int w, int h) {
    if (w > img.width || h > img.height) throw std::invalid_argument("crop: target exceeds source");
    ImageGrid out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x, y);
    return out;
}

}  // namespace corosa
