#pragma once

#include <sstream>

#include "corosa/forward_model.hpp"
#include "corosa/weights.hpp"

namespace corosa {

struct AdmmConfig {
    double lambda = 0.01;   // smoothing weight
    double gamma = 1.0;     // penalty parameter
    int p = 1;              // Schatten order, 1 or 2
    double u = 1.0;         // box upper bound
    int max_iters = 100;
    int cg_max_iters = 50;
    double cg_rel_tol = 1e-6;
    double primal_tol = 1e-4;

    void validate() const {
        if (lambda < 0) throw std::invalid_argument("AdmmConfig: lambda must be >= 0");
        if (!(gamma > 0)) throw std::invalid_argument("AdmmConfig: gamma must be positive");
        if (p != 1 && p != 2) throw std::invalid_argument("AdmmConfig: p must be 1 or 2");
        if (!(u > 0)) throw std::invalid_argument("AdmmConfig: u must be positive");
        if (max_iters < 0 || cg_max_iters <= 0) throw std::invalid_argument("AdmmConfig: bad iteration budget");
        if (!(cg_rel_tol > 0) || !(primal_tol > 0)) throw std::invalid_argument("AdmmConfig: bad tolerance");
    }
};

// ---- weighted operators D'_f = B D_f and D'_s = (I - B) D_s ----

inline VectorField weighted_grad(const ImageGrid& s_up, const ImageGrid& beta) {
    if (!s_up.same_dims(beta)) throw std::invalid_argument("weighted_grad: dimension mismatch");
    VectorField g = grad(s_up);
    for (int c = 0; c < 2; ++c)
        for (size_t i = 0; i < beta.size(); ++i) g.ch[c].data[i] *= beta.data[i];
    return g;
}

inline ImageGrid weighted_grad_adjoint(const VectorField& v, const ImageGrid& beta) {
    if (v.channels() != 2 || !v.ch[0].same_dims(beta))
        throw std::invalid_argument("weighted_grad_adjoint: dimension mismatch");
    VectorField w = v;
    for (int c = 0; c < 2; ++c)
        for (size_t i = 0; i < beta.size(); ++i) w.ch[c].data[i] *= beta.data[i];
    return grad_adjoint(w);
}

inline VectorField weighted_hess(const ImageGrid& s_up, const ImageGrid& beta) {
    if (!s_up.same_dims(beta)) throw std::invalid_argument("weighted_hess: dimension mismatch");
    VectorField h = hess(s_up);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < beta.size(); ++i) h.ch[c].data[i] *= (1.0 - beta.data[i]);
    return h;
}

inline ImageGrid weighted_hess_adjoint(const VectorField& v, const ImageGrid& beta) {
    if (v.channels() != 3 || !v.ch[0].same_dims(beta))
        throw std::invalid_argument("weighted_hess_adjoint: dimension mismatch");
    VectorField w = v;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < beta.size(); ++i) w.ch[c].data[i] *= (1.0 - beta.data[i]);
    return hess_adjoint(w);
}

// ---- prox steps over whole fields ----

inline VectorField field_soft_threshold(const VectorField& v, double t) {
    VectorField out(v.width(), v.height(), 2);
    for (size_t i = 0; i < v.ch[0].size(); ++i) {
        auto r = vec_soft_threshold({v.ch[0].data[i], v.ch[1].data[i]}, t);
        out.ch[0].data[i] = r[0];
        out.ch[1].data[i] = r[1];
    }
    return out;
}

inline VectorField field_hs_prox(const VectorField& v, double t, int p) {
    VectorField out(v.width(), v.height(), 3);
    for (size_t i = 0; i < v.ch[0].size(); ++i) {
        auto r = hs_prox({v.ch[0].data[i], v.ch[1].data[i], v.ch[2].data[i]}, t, p);
        for (int c = 0; c < 3; ++c) out.ch[c].data[i] = r[c];
    }
    return out;
}

// ---- objective ----

/// R_sa at a full-resolution iterate: sum_r beta ||grad||_2 + (1-beta) ||zeta(Hess)||_p.
inline double regularizer_value(const ImageGrid& t, const ImageGrid& beta, int p) {
    VectorField g = grad(t);
    VectorField h = hess(t);
    double s = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        s += beta.data[i] * std::hypot(g.ch[0].data[i], g.ch[1].data[i]);
        s += (1.0 - beta.data[i]) *
             hess_eig_norm(h.ch[0].data[i], h.ch[1].data[i], h.ch[2].data[i], p);
    }
    return s;
}

/// F + lambda R_sa + box indicator at level j (no barrier term; it is
/// constant in s). Box violations beyond 1e-12 return +inf.
inline double objective_fixed_beta(const ImageGrid& s, const ImageGrid& beta, const DataTerm& data,
                                   int j, const AdmmConfig& cfg) {
    ImageGrid t = upsample_j(s, j);
    constexpr double slack = 1e-12;
    for (double v : t.data)
        if (v < -slack || v > cfg.u + slack) return std::numeric_limits<double>::infinity();
    return data.residual_sq(t) + cfg.lambda * regularizer_value(t, beta, cfg.p);
}

/// Full J_sa = F + lambda (R_sa + L(beta, tau)) + box indicator. The barrier
/// sits inside the lambda block: that grouping makes the closed-form beta
/// update the exact minimizer of J_sa over beta, which the BCD descent
/// argument needs.
inline double objective_eval(const ImageGrid& s, const ImageGrid& beta, const ImageGrid& tau,
                             const DataTerm& data, int j, const AdmmConfig& cfg) {
    return objective_fixed_beta(s, beta, data, j, cfg) + cfg.lambda * log_barrier(beta, tau);
}

// ---- preconditioner (circulant approximation of the s-update system) ----

/// Filter form of A_hat_j = E^(j)^T (I + sum D^T D) E^(j): the 2^j-fold
/// decimation of B(r) = u_j * u_j(-r) * [1 + sum of derivative
/// autocorrelations], applied by pointwise division in the DFT domain.
/// The d_xy autocorrelation enters twice, matching the Frobenius weight of
/// the symmetric embedding.
class Preconditioner {
public:
    Preconditioner(int fine_w, int fine_h, int j) : w_(fine_w >> j), h_(fine_h >> j) {
        if ((w_ << j) != fine_w || (h_ << j) != fine_h)
            throw std::invalid_argument("Preconditioner: dims not divisible by 2^j");
        StencilKernel c = kernel_delta();
        auto add = [&c](const StencilKernel& k, double w) { c = kernel_sum(c, kernel_scale(k, w)); };
        add(kernel_autocorr(kernel_dx()), 1.0);
        add(kernel_autocorr(kernel_dy()), 1.0);
        add(kernel_autocorr(kernel_dxx()), 1.0);
        add(kernel_autocorr(kernel_dyy()), 1.0);
        add(kernel_autocorr(kernel_dxy()), 2.0);
        StencilKernel uj = kernel_interp2d_cascade(j);
        StencilKernel B = kernel_conv(kernel_conv(uj, kernel_flip(uj)), c);
        ImageGrid fine = kernel_to_periodic_image(B, fine_w, fine_h);
        ImageGrid coarse(w_, h_);
        int f = 1 << j;
        for (int y = 0; y < h_; ++y)
            for (int x = 0; x < w_; ++x) coarse.at(x, y) = fine.at(x * f, y * f);
        spectrum_ = fft2(coarse);
        double n = std::sqrt(double(coarse.size()));
        gain_.resize(coarse.size());
        for (size_t i = 0; i < gain_.size(); ++i)
            gain_[i] = std::max(spectrum_.data[i].real() * n, 0.0);  // symmetric kernel: real spectrum
    }

    /// A_hat_j x (the circulant operator itself).
    ImageGrid apply_forward(const ImageGrid& x) const {
        ComplexGrid spec = fft2(x);
        for (size_t i = 0; i < spec.size(); ++i) spec.data[i] *= gain_[i];
        return ifft2(spec).real_part();
    }

    /// A_hat_j^{-1} x, with a 1e-12 floor on the DFT magnitude.
    ImageGrid apply(const ImageGrid& x) const {
        ComplexGrid spec = fft2(x);
        for (size_t i = 0; i < spec.size(); ++i) spec.data[i] /= (gain_[i] + kFloor);
        return ifft2(spec).real_part();
    }

private:
    static StencilKernel kernel_sum(const StencilKernel& a, const StencilKernel& b) {
        int top = std::max(a.origin_row, b.origin_row);
        int left = std::max(a.origin_col, b.origin_col);
        int bottom = std::max(a.rows - a.origin_row, b.rows - b.origin_row);
        int right = std::max(a.cols - a.origin_col, b.cols - b.origin_col);
        StencilKernel out(top + bottom, left + right, top, left);
        for (int r = 0; r < a.rows; ++r)
            for (int cc = 0; cc < a.cols; ++cc)
                out.tap(r - a.origin_row + top, cc - a.origin_col + left) += a.tap(r, cc);
        for (int r = 0; r < b.rows; ++r)
            for (int cc = 0; cc < b.cols; ++cc)
                out.tap(r - b.origin_row + top, cc - b.origin_col + left) += b.tap(r, cc);
        return out;
    }

    static constexpr double kFloor = 1e-12;
    int w_, h_;
    ComplexGrid spectrum_;
    std::vector<double> gain_;
};

/// One-shot form: apply the inverse of the level-j circulant to x.
inline ImageGrid precond_apply(const ImageGrid& x, int j) {
    return Preconditioner(x.width << j, x.height << j, j).apply(x);
}

// ---- s-update system ----
// A s = 2 E^T H^T H E s + gamma E^T (D_x^T b^2 D_x + D_y^T b^2 D_y
//       + D_xx^T q^2 D_xx + D_yy^T q^2 D_yy + 2 D_xy^T q^2 D_xy + I) E s
// with b = beta, q = 1 - beta. The xy factor 2 carries the Frobenius metric
// of the symmetric embedding through the splitting.

namespace detail {

struct SystemOperator {
    const DataTerm& data;
    const ImageGrid& beta;
    int j;
    double gamma;

    ImageGrid apply(const ImageGrid& s) const {
        ImageGrid t = upsample_j(s, j);
        ImageGrid fine = data.normal_apply(t);           // H^T H E s
        for (double& v : fine.data) v *= 2.0;
        ImageGrid reg = weighted_grad_adjoint(weighted_grad(t, beta), beta);
        VectorField hs = weighted_hess(t, beta);
        hs.ch[2] = scaled(hs.ch[2], 2.0);
        axpy(1.0, weighted_hess_adjoint(hs, beta), reg);
        axpy(1.0, t, reg);
        axpy(gamma, reg, fine);
        return upsample_j_adjoint(fine, j);
    }
};

}  // namespace detail

struct CgResult {
    ImageGrid x;
    int iters = 0;
    double rel_residual = 0;
};

/// Preconditioned conjugate gradient on the SPD s-update system.
/// Throws solver_error when the residual grows for 10 consecutive iterations.
template <typename Op>
CgResult pcg_solve(const Op& A, const ImageGrid& rhs, const ImageGrid& x0, int max_iters,
                   double rel_tol, const Preconditioner* prec, const char* context = "cg") {
    double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0) return {ImageGrid(rhs.width, rhs.height, 0.0), 0, 0.0};
    ImageGrid x = x0;
    ImageGrid r = rhs;
    axpy(-1.0, A.apply(x), r);
    ImageGrid z = prec ? prec->apply(r) : r;
    ImageGrid p = z;
    double rz = dot(r, z);
    double res = norm2(r) / rhs_norm;
    int grow_streak = 0;
    int it = 0;
    for (; it < max_iters && res > rel_tol; ++it) {
        ImageGrid Ap = A.apply(p);
        double pAp = dot(p, Ap);
        if (!(pAp > 0) || !std::isfinite(pAp)) {
            std::ostringstream msg;
            msg << context << ": CG breakdown, p^T A p = " << pAp << " at iteration " << it;
            throw solver_error(msg.str());
        }
        double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        double res_new = norm2(r) / rhs_norm;
        grow_streak = res_new > res ? grow_streak + 1 : 0;
        if (grow_streak >= 10) {
            std::ostringstream msg;
            msg << context << ": CG diverging, residual " << res_new << " grew 10 consecutive iterations (iter " << it << ")";
            throw solver_error(msg.str());
        }
        res = res_new;
        z = prec ? prec->apply(r) : r;
        double rz_new = dot(r, z);
        double beta_cg = rz_new / rz;
        rz = rz_new;
        for (size_t i = 0; i < p.size(); ++i) p.data[i] = z.data[i] + beta_cg * p.data[i];
    }
    return {std::move(x), it, res};
}

struct AdmmResult {
    ImageGrid s;
    int iters = 0;
    double primal_residual = 0;
    std::vector<double> residual_history;
    double objective_init = 0;
    double objective_out = 0;
    bool fell_back = false;
    int cg_iters_total = 0;
};

/// One subproblem's ADMM variables (s at coarse dims, everything else at
/// measurement dims). Exposed for inspection of the final iterate.
struct SplitState {
    ImageGrid s;
    VectorField d_f, d_s;
    ImageGrid d_0;
    VectorField w_f, w_s;
    ImageGrid w_0;
};

/// ADMM for the fixed-beta, level-j subproblem. Iterates the three prox
/// steps, the PCG s-update, and dual ascent; stops on the relative primal
/// residual or the iteration budget. The returned iterate is clipped to the
/// box (the interpolator preserves [0, u]) and never has a worse objective
/// than s_init: the initializer is returned instead if the solve failed to
/// descend, which keeps the outer descent arguments valid.
inline AdmmResult admm_solve(const ImageGrid& s_init, const ImageGrid& beta, const DataTerm& data,
                             int j, const AdmmConfig& cfg, SplitState* capture = nullptr) {
    cfg.validate();
    int fine_w = data.width(), fine_h = data.height();
    if (s_init.width << j != fine_w || s_init.height << j != fine_h)
        throw std::invalid_argument("admm_solve: s_init is not measurement dims / 2^j");
    if (beta.width != fine_w || beta.height != fine_h)
        throw std::invalid_argument("admm_solve: beta must be at measurement dims");

    const double gamma = cfg.gamma;
    const double thresh = cfg.lambda / gamma;
    Preconditioner prec(fine_w, fine_h, j);
    detail::SystemOperator A{data, beta, j, gamma};
    ImageGrid hm = data.data_rhs();

    AdmmResult out;
    out.objective_init = objective_fixed_beta(s_init, beta, data, j, cfg);

    ImageGrid s = s_init;
    VectorField w_f(fine_w, fine_h, 2), w_s(fine_w, fine_h, 3);
    ImageGrid w_0(fine_w, fine_h);

    ImageGrid t = upsample_j(s, j);
    for (int k = 0; k < cfg.max_iters; ++k) {
        // d-steps from the current iterate
        VectorField gf = weighted_grad(t, beta);
        VectorField gs = weighted_hess(t, beta);
        VectorField df_in = gf, ds_in = gs;
        for (int c = 0; c < 2; ++c) axpy(1.0 / gamma, w_f.ch[c], df_in.ch[c]);
        for (int c = 0; c < 3; ++c) axpy(1.0 / gamma, w_s.ch[c], ds_in.ch[c]);
        VectorField d_f = field_soft_threshold(df_in, thresh);
        VectorField d_s = field_hs_prox(ds_in, thresh, cfg.p);
        ImageGrid d0_in = t;
        axpy(1.0 / gamma, w_0, d0_in);
        ImageGrid d_0 = box_project(d0_in, cfg.u);

        // s-update: rhs = E^T (2 H^T m + gamma [D'_f^T (d_f - w_f/g) + ... + (d_0 - w_0/g)])
        VectorField rf = d_f, rs = d_s;
        for (int c = 0; c < 2; ++c) axpy(-1.0 / gamma, w_f.ch[c], rf.ch[c]);
        for (int c = 0; c < 3; ++c) axpy(-1.0 / gamma, w_s.ch[c], rs.ch[c]);
        rs.ch[2] = scaled(rs.ch[2], 2.0);
        ImageGrid reg_rhs = weighted_grad_adjoint(rf, beta);
        axpy(1.0, weighted_hess_adjoint(rs, beta), reg_rhs);
        axpy(1.0, d_0, reg_rhs);
        axpy(-1.0 / gamma, w_0, reg_rhs);
        ImageGrid rhs = hm;
        for (double& v : rhs.data) v *= 2.0;
        axpy(gamma, reg_rhs, rhs);
        rhs = upsample_j_adjoint(rhs, j);

        CgResult cg = pcg_solve(A, rhs, s, cfg.cg_max_iters, cfg.cg_rel_tol, &prec, "s-update");
        s = std::move(cg.x);
        out.cg_iters_total += cg.iters;

        // dual ascent w <- w + gamma (M E s - d)
        t = upsample_j(s, j);
        VectorField res_f = weighted_grad(t, beta);
        VectorField res_s = weighted_hess(t, beta);
        for (int c = 0; c < 2; ++c) axpy(-1.0, d_f.ch[c], res_f.ch[c]);
        for (int c = 0; c < 3; ++c) axpy(-1.0, d_s.ch[c], res_s.ch[c]);
        ImageGrid res_0 = t;
        axpy(-1.0, d_0, res_0);
        for (int c = 0; c < 2; ++c) axpy(gamma, res_f.ch[c], w_f.ch[c]);
        for (int c = 0; c < 3; ++c) axpy(gamma, res_s.ch[c], w_s.ch[c]);
        axpy(gamma, res_0, w_0);

        double rnum = std::sqrt(dot(res_f, res_f) + dot(res_s, res_s) + norm2_sq(res_0));
        double rden = std::sqrt(dot(d_f, d_f) + dot(d_s, d_s) + norm2_sq(d_0));
        double primal = rnum / std::max(rden, 1e-300);
        out.residual_history.push_back(primal);
        out.primal_residual = primal;
        out.iters = k + 1;
        if (capture) *capture = {s, d_f, d_s, d_0, w_f, w_s, w_0};
        if (primal <= cfg.primal_tol) break;
    }

    ImageGrid s_out = clamp(s, 0.0, cfg.u);
    out.objective_out = objective_fixed_beta(s_out, beta, data, j, cfg);
    if (!(out.objective_out <= out.objective_init)) {
        s_out = s_init;
        out.objective_out = out.objective_init;
        out.fell_back = true;
    }
    out.s = std::move(s_out);
    return out;
}

}  // namespace corosa
