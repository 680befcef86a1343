#pragma once

#include <map>
#include <optional>

#include "corosa/admm.hpp"

namespace corosa {

/// Coarse-to-fine schedule: coarsest level K plus optional per-level
/// AdmmConfig overrides (keyed by level j).
struct PyramidSchedule {
    int K = 4;
    AdmmConfig base;
    std::map<int, AdmmConfig> overrides;

    AdmmConfig at(int j) const {
        auto it = overrides.find(j);
        return it == overrides.end() ? base : it->second;
    }
};

struct LevelInfo {
    int level = 0;
    int admm_iters = 0;
    double primal_residual = 0;
    double objective_init = 0;   // J at the warm start, fixed beta
    double objective_out = 0;
    double data_fit = 0;         // F at the level output
    double lambda_reg = 0;       // lambda R_sa at the level output
    bool fell_back = false;
};

struct MultiresResult {
    ImageGrid s;      // s_hat^(0), full resolution
    ImageGrid beta;   // last beta_bar
    std::vector<LevelInfo> levels;
};

/// Weight policy per level: recompute the exact beta from the interpolated
/// previous solution (adaptive), or hold a caller-supplied map fixed (the
/// tv1/tv2/hs/cotv/cohs presets).
struct BetaPolicy {
    static BetaPolicy adaptive() { return {}; }
    static BetaPolicy fixed(ImageGrid beta) { return {std::move(beta)}; }
    std::optional<ImageGrid> fixed_beta;
};

/// Multiresolution initialization: solve level K with beta = 0, then for
/// j = K-1..0 recompute beta from f = E^(j+1) s_hat^(j+1) (tau from f as
/// well) and solve level j warm-started from the 2x interpolation of the
/// previous level. K = 0 degenerates to a single full-resolution solve with
/// beta taken from the measurement-domain baseline.
inline MultiresResult multires_init(const DataTerm& data, const PyramidSchedule& sched,
                                    const BetaPolicy& policy = BetaPolicy::adaptive()) {
    if (sched.K < 0) throw std::invalid_argument("multires_init: K must be >= 0");
    int w = data.width(), h = data.height();
    int f = 1 << sched.K;
    if (w % f || h % f) throw std::invalid_argument("multires_init: dims not divisible by 2^K");

    auto beta_from = [&](const ImageGrid& est, const AdmmConfig& cfg) {
        return adaptive_beta(est, cfg.p);
    };

    MultiresResult out;
    AdmmConfig cfgK = sched.at(sched.K);
    ImageGrid beta;
    if (policy.fixed_beta) {
        beta = *policy.fixed_beta;
    } else if (sched.K == 0) {
        beta = beta_from(clamp(data.baseline(), 0.0, cfgK.u), cfgK);
    } else {
        beta = ImageGrid(w, h, 0.0);  // pure second order at the coarsest level
    }

    auto record = [&out, &data](int j, const AdmmResult& r, const ImageGrid& beta_j, const AdmmConfig& cfg) {
        LevelInfo info{j, r.iters, r.primal_residual, r.objective_init, r.objective_out, 0, 0, r.fell_back};
        ImageGrid t = upsample_j(r.s, j);
        info.data_fit = data.residual_sq(t);
        info.lambda_reg = cfg.lambda * regularizer_value(t, beta_j, cfg.p);
        out.levels.push_back(info);
    };

    auto solve_level = [&](const ImageGrid& init, const ImageGrid& beta_j, int j,
                           const AdmmConfig& cfg) {
        try {
            return admm_solve(init, beta_j, data, j, cfg);
        } catch (const solver_error& e) {
            throw solver_error("level " + std::to_string(j) + ": " + e.what());
        }
    };

    ImageGrid s(w / f, h / f, 0.0);
    AdmmResult r = solve_level(s, beta, sched.K, cfgK);
    record(sched.K, r, beta, cfgK);
    s = std::move(r.s);

    for (int j = sched.K - 1; j >= 0; --j) {
        AdmmConfig cfg = sched.at(j);
        if (!policy.fixed_beta) beta = beta_from(upsample_j(s, j + 1), cfg);
        ImageGrid warm = upsample2(s);
        AdmmResult rj = solve_level(warm, beta, j, cfg);
        record(j, rj, beta, cfg);
        s = std::move(rj.s);
    }
    out.s = std::move(s);
    out.beta = std::move(beta);
    return out;
}

}  // namespace corosa
