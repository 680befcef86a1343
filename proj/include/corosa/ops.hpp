#pragma once

#include "corosa/grid.hpp"

namespace corosa {

/// Periodic 2D convolution: out(r) = sum_t k(t) img(r - t).
/// Tap (tr, tc) sits at offset (tr - origin_row, tc - origin_col).
/// Fixed tap order makes the sum deterministic, so conv commutes with
/// circular shifts bit-for-bit.
inline ImageGrid conv2_periodic(const ImageGrid& img, const StencilKernel& k) {
    ImageGrid out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double s = 0;
            for (int tr = 0; tr < k.rows; ++tr) {
                int sy = wrap(y - (tr - k.origin_row), img.height);
                for (int tc = 0; tc < k.cols; ++tc) {
                    int sx = wrap(x - (tc - k.origin_col), img.width);
                    s += k.tap(tr, tc) * img.at(sx, sy);
                }
            }
            out.at(x, y) = s;
        }
    }
    return out;
}

// ---- kernel algebra ----

/// k(-r): flip taps about the origin.
inline StencilKernel kernel_flip(const StencilKernel& k) {
    StencilKernel out(k.rows, k.cols, k.rows - 1 - k.origin_row, k.cols - 1 - k.origin_col);
    for (int r = 0; r < k.rows; ++r)
        for (int c = 0; c < k.cols; ++c) out.tap(k.rows - 1 - r, k.cols - 1 - c) = k.tap(r, c);
    return out;
}

/// Full linear convolution of two kernels.
inline StencilKernel kernel_conv(const StencilKernel& a, const StencilKernel& b) {
    StencilKernel out(a.rows + b.rows - 1, a.cols + b.cols - 1,
                      a.origin_row + b.origin_row, a.origin_col + b.origin_col);
    for (int r1 = 0; r1 < a.rows; ++r1)
        for (int c1 = 0; c1 < a.cols; ++c1)
            for (int r2 = 0; r2 < b.rows; ++r2)
                for (int c2 = 0; c2 < b.cols; ++c2)
                    out.tap(r1 + r2, c1 + c2) += a.tap(r1, c1) * b.tap(r2, c2);
    return out;
}

/// k * k(-r), the autocorrelation; spectrum |k_hat|^2.
inline StencilKernel kernel_autocorr(const StencilKernel& k) { return kernel_conv(k, kernel_flip(k)); }

/// Insert factor-1 zeros between taps along both axes (z -> z^factor).
inline StencilKernel kernel_zero_stuff(const StencilKernel& k, int factor) {
    StencilKernel out((k.rows - 1) * factor + 1, (k.cols - 1) * factor + 1,
                      k.origin_row * factor, k.origin_col * factor);
    for (int r = 0; r < k.rows; ++r)
        for (int c = 0; c < k.cols; ++c) out.tap(r * factor, c * factor) = k.tap(r, c);
    return out;
}

inline StencilKernel kernel_scale(const StencilKernel& k, double a) {
    StencilKernel out = k;
    for (double& t : out.taps) t *= a;
    return out;
}

inline StencilKernel kernel_delta() {
    StencilKernel k(1, 1, 0, 0);
    k.tap(0, 0) = 1.0;
    return k;
}

/// Accumulate kernel taps onto a periodic w x h grid, origin at pixel (0,0).
inline ImageGrid kernel_to_periodic_image(const StencilKernel& k, int w, int h) {
    ImageGrid out(w, h);
    for (int r = 0; r < k.rows; ++r)
        for (int c = 0; c < k.cols; ++c)
            out.at(wrap(c - k.origin_col, w), wrap(r - k.origin_row, h)) += k.tap(r, c);
    return out;
}

// ---- derivative stencils ----
// Forward differences for first order; d_xy composes the two first differences.

inline StencilKernel kernel_dx() {
    StencilKernel k(1, 2, 0, 1);  // out(x) = s(x+1) - s(x)
    k.tap(0, 0) = 1.0;
    k.tap(0, 1) = -1.0;
    return k;
}

inline StencilKernel kernel_dy() {
    StencilKernel k(2, 1, 1, 0);
    k.tap(0, 0) = 1.0;
    k.tap(1, 0) = -1.0;
    return k;
}

inline StencilKernel kernel_dxx() {
    StencilKernel k(1, 3, 0, 1);  // s(x+1) - 2 s(x) + s(x-1)
    k.tap(0, 0) = 1.0;
    k.tap(0, 1) = -2.0;
    k.tap(0, 2) = 1.0;
    return k;
}

inline StencilKernel kernel_dyy() {
    StencilKernel k(3, 1, 1, 0);
    k.tap(0, 0) = 1.0;
    k.tap(1, 0) = -2.0;
    k.tap(2, 0) = 1.0;
    return k;
}

inline StencilKernel kernel_dxy() { return kernel_conv(kernel_dx(), kernel_dy()); }

// ---- first and second order derivative fields ----
// Direct index forms of the stencils above; adjoints are the exact transposes.

inline VectorField grad(const ImageGrid& s) {
    VectorField g(s.width, s.height, 2);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            int xp = x + 1 == s.width ? 0 : x + 1;
            int yp = y + 1 == s.height ? 0 : y + 1;
            g.ch[0].at(x, y) = s.at(xp, y) - s.at(x, y);
            g.ch[1].at(x, y) = s.at(x, yp) - s.at(x, y);
        }
    }
    return g;
}

inline ImageGrid grad_adjoint(const VectorField& v) {
    if (v.channels() != 2) throw std::invalid_argument("grad_adjoint: expected 2-channel field");
    const ImageGrid& gx = v.ch[0];
    const ImageGrid& gy = v.ch[1];
    ImageGrid out(gx.width, gx.height);
    for (int y = 0; y < out.height; ++y) {
        int ym = y == 0 ? out.height - 1 : y - 1;
        for (int x = 0; x < out.width; ++x) {
            int xm = x == 0 ? out.width - 1 : x - 1;
            out.at(x, y) = (gx.at(xm, y) - gx.at(x, y)) + (gy.at(x, ym) - gy.at(x, y));
        }
    }
    return out;
}

inline VectorField hess(const ImageGrid& s) {
    VectorField h(s.width, s.height, 3);
    for (int y = 0; y < s.height; ++y) {
        int yp = y + 1 == s.height ? 0 : y + 1;
        int ym = y == 0 ? s.height - 1 : y - 1;
        for (int x = 0; x < s.width; ++x) {
            int xp = x + 1 == s.width ? 0 : x + 1;
            int xm = x == 0 ? s.width - 1 : x - 1;
            h.ch[0].at(x, y) = s.at(xp, y) - 2 * s.at(x, y) + s.at(xm, y);
            h.ch[1].at(x, y) = s.at(x, yp) - 2 * s.at(x, y) + s.at(x, ym);
            h.ch[2].at(x, y) = s.at(xp, yp) - s.at(xp, y) - s.at(x, yp) + s.at(x, y);
        }
    }
    return h;
}

inline ImageGrid hess_adjoint(const VectorField& v) {
    if (v.channels() != 3) throw std::invalid_argument("hess_adjoint: expected 3-channel field");
    const ImageGrid& hxx = v.ch[0];
    const ImageGrid& hyy = v.ch[1];
    const ImageGrid& hxy = v.ch[2];
    ImageGrid out(hxx.width, hxx.height);
    for (int y = 0; y < out.height; ++y) {
        int yp = y + 1 == out.height ? 0 : y + 1;
        int ym = y == 0 ? out.height - 1 : y - 1;
        for (int x = 0; x < out.width; ++x) {
            int xp = x + 1 == out.width ? 0 : x + 1;
            int xm = x == 0 ? out.width - 1 : x - 1;
            double s = hxx.at(xp, y) - 2 * hxx.at(x, y) + hxx.at(xm, y);
            s += hyy.at(x, yp) - 2 * hyy.at(x, y) + hyy.at(x, ym);
            s += hxy.at(xm, ym) - hxy.at(xm, y) - hxy.at(x, ym) + hxy.at(x, y);
            out.at(x, y) = s;
        }
    }
    return out;
}

// ---- dyadic interpolation ----
// Expansion by 2 then filtering with u(r) = [1 4 6 4 1]^T [1 4 6 4 1] / 64.
// Polyphase weights per axis: even phase {1,6,1}/8, odd phase {4,4}/8; both
// sum to 1, so constants and [0,u] box membership are preserved.

inline StencilKernel kernel_interp1d_col() {
    StencilKernel k(5, 1, 2, 0);
    const double t[5] = {1, 4, 6, 4, 1};
    for (int i = 0; i < 5; ++i) k.tap(i, 0) = t[i] / 8.0;
    return k;
}

inline StencilKernel kernel_interp1d_row() {
    StencilKernel k(1, 5, 0, 2);
    const double t[5] = {1, 4, 6, 4, 1};
    for (int i = 0; i < 5; ++i) k.tap(0, i) = t[i] / 8.0;
    return k;
}

/// Normalized 2D interpolation filter u(r)/64 for one dyadic stage.
inline StencilKernel kernel_interp2d() {
    return kernel_conv(kernel_interp1d_col(), kernel_interp1d_row());
}

namespace detail {

// One axis of the polyphase expansion (length n -> 2n).
inline void upsample_axis(const double* in, int n, int stride, double* out, int out_stride) {
    for (int i = 0; i < n; ++i) {
        int im = i == 0 ? n - 1 : i - 1;
        int ip = i + 1 == n ? 0 : i + 1;
        out[size_t(2 * i) * out_stride] =
            (in[size_t(im) * stride] + 6.0 * in[size_t(i) * stride] + in[size_t(ip) * stride]) / 8.0;
        out[size_t(2 * i + 1) * out_stride] =
            (4.0 * in[size_t(i) * stride] + 4.0 * in[size_t(ip) * stride]) / 8.0;
    }
}

// Transpose of upsample_axis (length 2n -> n).
inline void upsample_axis_adjoint(const double* in, int n2, int stride, double* out, int out_stride) {
    int n = n2 / 2;
    for (int i = 0; i < n; ++i) {
        int e = 2 * i;
        int em = wrap(2 * i - 2, n2), ep = wrap(2 * i + 2, n2);
        int om = wrap(2 * i - 1, n2), op = wrap(2 * i + 1, n2);
        out[size_t(i) * out_stride] = (in[size_t(em) * stride] + 6.0 * in[size_t(e) * stride] +
                                       in[size_t(ep) * stride] + 4.0 * in[size_t(om) * stride] +
                                       4.0 * in[size_t(op) * stride]) /
                                      8.0;
    }
}

}  // namespace detail

/// Two-fold dyadic interpolation (w x h -> 2w x 2h).
inline ImageGrid upsample2(const ImageGrid& img) {
    // columns first: h -> 2h
    ImageGrid tmp(img.width, 2 * img.height);
    std::vector<double> col_in(img.height), col_out(2 * img.height);
    for (int x = 0; x < img.width; ++x) {
        for (int y = 0; y < img.height; ++y) col_in[y] = img.at(x, y);
        detail::upsample_axis(col_in.data(), img.height, 1, col_out.data(), 1);
        for (int y = 0; y < 2 * img.height; ++y) tmp.at(x, y) = col_out[y];
    }
    ImageGrid out(2 * img.width, 2 * img.height);
    for (int y = 0; y < tmp.height; ++y)
        detail::upsample_axis(&tmp.data[size_t(y) * tmp.width], tmp.width, 1,
                              &out.data[size_t(y) * out.width], 1);
    return out;
}

/// Exact transpose of upsample2 (2w x 2h -> w x h).
inline ImageGrid upsample2_adjoint(const ImageGrid& img) {
    if (img.width % 2 || img.height % 2)
        throw std::invalid_argument("upsample2_adjoint: dimensions must be even");
    ImageGrid tmp(img.width / 2, img.height);
    for (int y = 0; y < img.height; ++y)
        detail::upsample_axis_adjoint(&img.data[size_t(y) * img.width], img.width, 1,
                                      &tmp.data[size_t(y) * tmp.width], 1);
    ImageGrid out(tmp.width, img.height / 2);
    std::vector<double> col_in(img.height), col_out(img.height / 2);
    for (int x = 0; x < tmp.width; ++x) {
        for (int y = 0; y < tmp.height; ++y) col_in[y] = tmp.at(x, y);
        detail::upsample_axis_adjoint(col_in.data(), tmp.height, 1, col_out.data(), 1);
        for (int y = 0; y < out.height; ++y) out.at(x, y) = col_out[y];
    }
    return out;
}

/// E^(j): j cascaded two-fold interpolation stages; j = 0 is the identity.
inline ImageGrid upsample_j(const ImageGrid& img, int j) {
    if (j < 0) throw std::invalid_argument("upsample_j: level must be >= 0");
    ImageGrid out = img;
    for (int i = 0; i < j; ++i) out = upsample2(out);
    return out;
}

inline ImageGrid upsample_j_adjoint(const ImageGrid& img, int j) {
    if (j < 0) throw std::invalid_argument("upsample_j_adjoint: level must be >= 0");
    ImageGrid out = img;
    for (int i = 0; i < j; ++i) out = upsample2_adjoint(out);
    return out;
}

/// Single-stage equivalent filter u_j: product of u(z^(2^i)), i = 0..j-1,
/// with the 1/64-per-stage normalization folded in.
inline StencilKernel kernel_interp2d_cascade(int j) {
    StencilKernel uj = kernel_delta();
    StencilKernel u = kernel_interp2d();
    for (int i = 0; i < j; ++i) uj = kernel_conv(uj, kernel_zero_stuff(u, 1 << i));
    return uj;
}

}  // namespace corosa
