#pragma once

#include <array>

#include "corosa/grid.hpp"

namespace corosa {

/// Symmetric 2x2 matrix [[a, b], [b, c]], the embedding of a Hessian
/// 3-vector (hxx, hyy, hxy) -> [[hxx, hxy], [hxy, hyy]].
/// Frobenius norm carries the off-diagonal twice: sqrt(a^2 + c^2 + 2 b^2).
struct Sym2 {
    double a = 0, c = 0, b = 0;

    static Sym2 embed(double v1, double v2, double v3) { return {v1, v2, v3}; }
    std::array<double, 3> extract() const { return {a, c, b}; }
    double frob() const { return std::sqrt(a * a + c * c + 2 * b * b); }
};

struct Eig2 {
    double l1 = 0, l2 = 0;   // l1 >= l2
    double c2 = 1, s2 = 0;   // cos/sin of twice the eigenvector angle
};

/// Closed-form eigenvalues (a+c)/2 +- sqrt(((a-c)/2)^2 + b^2) and the
/// rotation carrying them back.
inline Eig2 eig2_sym(const Sym2& m) {
    double mu = 0.5 * (m.a + m.c);
    double dl = 0.5 * (m.a - m.c);
    double rho = std::hypot(dl, m.b);
    Eig2 e;
    e.l1 = mu + rho;
    e.l2 = mu - rho;
    if (rho > 0) {
        e.c2 = dl / rho;
        e.s2 = m.b / rho;
    }
    return e;
}

inline Sym2 recompose(double l1, double l2, double c2, double s2) {
    double mu = 0.5 * (l1 + l2);
    double dl = 0.5 * (l1 - l2);
    return {mu + dl * c2, mu - dl * c2, dl * s2};
}

inline Sym2 recompose(const Eig2& e) { return recompose(e.l1, e.l2, e.c2, e.s2); }

inline double soft_threshold(double x, double t) {
    double m = std::abs(x) - t;
    return m > 0 ? (x < 0 ? -m : m) : 0.0;
}

/// T(x, t) = max(0, ||x|| - t) x / ||x||; x = 0 maps to 0.
inline std::array<double, 2> vec_soft_threshold(const std::array<double, 2>& x, double t) {
    if (t < 0) throw std::invalid_argument("vec_soft_threshold: negative threshold");
    double n = std::hypot(x[0], x[1]);
    if (n == 0) return {0.0, 0.0};
    double s = n - t;
    if (s <= 0) return {0.0, 0.0};
    s /= n;
    return {s * x[0], s * x[1]};
}

/// HT(v, t, p): the d_s proximal map on Hessian 3-vectors, exact in the
/// Frobenius metric of the symmetric embedding.
/// p = 2: scale v by max(0, ||S(v)||_F - t) / ||S(v)||_F.
/// p = 1: soft-threshold the eigenvalues of S(v) and re-extract.
inline std::array<double, 3> hs_prox(const std::array<double, 3>& v, double t, int p) {
    if (t < 0) throw std::invalid_argument("hs_prox: negative threshold");
    if (p != 1 && p != 2) throw std::invalid_argument("hs_prox: p must be 1 or 2");
    Sym2 m = Sym2::embed(v[0], v[1], v[2]);
    if (p == 2) {
        double n = m.frob();
        if (n == 0) return {0.0, 0.0, 0.0};
        double s = n - t;
        if (s <= 0) return {0.0, 0.0, 0.0};
        s /= n;
        return {s * v[0], s * v[1], s * v[2]};
    }
    double mu = 0.5 * (m.a + m.c);
    double dl = 0.5 * (m.a - m.c);
    double rho = std::hypot(dl, m.b);
    if (rho == 0) {
        // both eigenvalues equal mu; eigenvectors are arbitrary, shrink directly
        double s = soft_threshold(mu, t);
        return {s, s, 0.0};
    }
    double l1 = soft_threshold(mu + rho, t);
    double l2 = soft_threshold(mu - rho, t);
    Sym2 out = recompose(l1, l2, dl / rho, m.b / rho);
    auto e = out.extract();
    return {e[0], e[1], e[2]};
}

/// Clip every pixel onto [0, u].
inline ImageGrid box_project(const ImageGrid& x, double u) {
    if (u <= 0) throw std::invalid_argument("box_project: bound must be positive");
    return clamp(x, 0.0, u);
}

}  // namespace corosa
