#pragma once

#include "corosa/ops.hpp"
#include "corosa/prox.hpp"

namespace corosa {

/// ||zeta(S(hxx, hyy, hxy))||_p at one pixel: p = 1 sums |eigenvalues|,
/// p = 2 is the Frobenius norm.
inline double hess_eig_norm(double hxx, double hyy, double hxy, int p) {
    if (p == 2) return std::sqrt(hxx * hxx + hyy * hyy + 2 * hxy * hxy);
    double mu = 0.5 * (hxx + hyy);
    double rho = std::hypot(0.5 * (hxx - hyy), hxy);
    return std::abs(mu + rho) + std::abs(mu - rho);
}

/// d(r) = ||grad f(r)||_2 - ||zeta(Hess f(r))||_p, the per-pixel gap that
/// drives the weight toward the cheaper regularizer.
inline ImageGrid d_map(const ImageGrid& f, int p) {
    if (p != 1 && p != 2) throw std::invalid_argument("d_map: p must be 1 or 2");
    VectorField g = grad(f);
    VectorField h = hess(f);
    ImageGrid d(f.width, f.height);
    for (size_t i = 0; i < d.size(); ++i) {
        double gn = std::hypot(g.ch[0].data[i], g.ch[1].data[i]);
        d.data[i] = gn - hess_eig_norm(h.ch[0].data[i], h.ch[1].data[i], h.ch[2].data[i], p);
    }
    return d;
}

/// Exact minimizer of beta*v1 + (1-beta)*v2 - tau*log(beta(1-beta)):
/// beta = 1/2 (1 - sign(d)(sqrt(4 tau^2/d^2 + 1) - 2 tau/|d|)) with d = v1 - v2.
/// Evaluated as 1/(sqrt(z^2+1)+z), z = 2 tau/|d|, which is stable when
/// tau >> |d|.
inline double beta_solve_scalar(double d, double tau) {
    if (!(tau > 0)) throw std::invalid_argument("beta_solve: tau must be positive");
    double ad = std::abs(d);
    if (ad < 1e-300) return 0.5;
    double z = 2.0 * tau / ad;
    double br = 0.5 / (std::sqrt(z * z + 1.0) + z);
    return d > 0 ? 0.5 - br : 0.5 + br;
}

inline ImageGrid beta_solve(const ImageGrid& d, const ImageGrid& tau) {
    if (!d.same_dims(tau)) throw std::invalid_argument("beta_solve: dimension mismatch");
    ImageGrid beta(d.width, d.height);
    for (size_t i = 0; i < d.size(); ++i) beta.data[i] = beta_solve_scalar(d.data[i], tau.data[i]);
    return beta;
}

/// Spatially varying switching rate: exp(-100 f^2) rescaled affinely onto
/// [0.01, 100]. Assumes f normalized to [0,1]; a constant f (no dynamic
/// range) maps to the insensitive end, tau = 100.
inline ImageGrid tau_map(const ImageGrid& f_bar) {
    constexpr double tau_lo = 0.01, tau_hi = 100.0;
    ImageGrid g(f_bar.width, f_bar.height);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (size_t i = 0; i < g.size(); ++i) {
        double v = std::exp(-100.0 * f_bar.data[i] * f_bar.data[i]);
        g.data[i] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi - lo > 0)) {
        for (double& v : g.data) v = tau_hi;
        return g;
    }
    double scale = (tau_hi - tau_lo) / (hi - lo);
    for (double& v : g.data) v = tau_lo + (v - lo) * scale;
    return g;
}

/// The pipeline's weight update: the exact minimizer of R_sa(est, beta) +
/// L(beta, tau) over beta, pixel by pixel. The barrier shares the
/// regularization block's lambda factor in the overall cost, so the gap d
/// enters unscaled and the switching behavior is independent of lambda.
inline ImageGrid beta_step(const ImageGrid& est, int p, const ImageGrid& tau) {
    return beta_solve(d_map(est, p), tau);
}

/// beta_step with tau derived from the estimate itself (unit-range clamp).
inline ImageGrid adaptive_beta(const ImageGrid& est, int p) {
    return beta_step(est, p, tau_map(clamp(est, 0.0, 1.0)));
}

/// -sum_r tau(r) log(beta(r)(1-beta(r))); +inf when beta touches {0,1}.
inline double log_barrier(const ImageGrid& beta, const ImageGrid& tau) {
    double s = 0;
    for (size_t i = 0; i < beta.size(); ++i) {
        double b = beta.data[i];
        double q = b * (1.0 - b);
        if (!(q > 0)) return std::numeric_limits<double>::infinity();
        s -= tau.data[i] * std::log(q);
    }
    return s;
}

}  // namespace corosa
