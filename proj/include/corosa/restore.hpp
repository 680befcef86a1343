#pragma once

#include <chrono>
#include <filesystem>
#include <future>
#include <optional>

#include "corosa/bcd.hpp"
#include "corosa/config.hpp"
#include "corosa/io.hpp"
#include "corosa/metrics.hpp"
#include "corosa/multires.hpp"

namespace corosa {

enum class Preset { Tv1, Tv2, Hs, Cotv, Cohs, CorosaI, Corosa };

inline Preset parse_preset(const std::string& name) {
    if (name == "tv1") return Preset::Tv1;
    if (name == "tv2") return Preset::Tv2;
    if (name == "hs") return Preset::Hs;
    if (name == "cotv") return Preset::Cotv;
    if (name == "cohs") return Preset::Cohs;
    if (name == "corosa-i") return Preset::CorosaI;
    if (name == "corosa") return Preset::Corosa;
    throw config_error("method.preset", "unknown preset '" + name + "'");
}

inline const char* preset_name(Preset p) {
    switch (p) {
        case Preset::Tv1: return "tv1";
        case Preset::Tv2: return "tv2";
        case Preset::Hs: return "hs";
        case Preset::Cotv: return "cotv";
        case Preset::Cohs: return "cohs";
        case Preset::CorosaI: return "corosa-i";
        default: return "corosa";
    }
}

/// Constant-weight rule for cotv/cohs: grid-search beta over {0.1..0.9} for
/// the lowest regularization functional value on the baseline estimate.
inline double constant_beta_search(const ImageGrid& baseline, int p) {
    VectorField g = grad(baseline);
    VectorField h = hess(baseline);
    double v1 = 0, v2 = 0;
    for (size_t i = 0; i < baseline.size(); ++i) {
        v1 += std::hypot(g.ch[0].data[i], g.ch[1].data[i]);
        v2 += hess_eig_norm(h.ch[0].data[i], h.ch[1].data[i], h.ch[2].data[i], p);
    }
    double best_b = 0.1, best_r = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 9; ++k) {
        double b = 0.1 * k;
        double r = b * v1 + (1 - b) * v2;
        if (r < best_r) {
            best_r = r;
            best_b = b;
        }
    }
    return best_b;
}

namespace detail {

inline void write_manifest(const std::string& path, const std::map<std::string, std::string>& kv) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    for (const auto& [k, v] : kv) f << k << " = " << v << "\n";
}

inline void write_trace_csv(const std::string& path, const std::vector<BcdTraceRow>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "cycle,half_step,J_sa,F,lambda_R,L,primal_residual\n";
    for (const auto& r : rows)
        f << r.cycle << "," << r.half << "," << format_double(r.objective) << ","
          << format_double(r.data_fit) << "," << format_double(r.lambda_reg) << ","
          << format_double(r.barrier) << "," << format_double(r.primal_residual) << "\n";
}

inline StencilKernel psf_from_config(const Config& cfg) {
    if (cfg.has("model.psf.file")) {
        ImageGrid img = read_f64(cfg.get_string("model.psf.file"));
        if (img.width % 2 == 0 || img.height % 2 == 0)
            throw config_error("model.psf.file", "psf image must have odd dimensions");
        StencilKernel k(img.height, img.width, img.height / 2, img.width / 2);
        for (int r = 0; r < k.rows; ++r)
            for (int c = 0; c < k.cols; ++c) k.tap(r, c) = img.at(c, r);
        return k;
    }
    double sigma = cfg.get_double("model.psf.sigma", 2.0);
    int radius = int(cfg.get_int("model.psf.radius", 8));
    return make_gaussian_psf(sigma, radius);
}

inline ImageGrid psf_to_image(const StencilKernel& k) {
    ImageGrid img(k.cols, k.rows);
    for (int r = 0; r < k.rows; ++r)
        for (int c = 0; c < k.cols; ++c) img.at(c, r) = k.tap(r, c);
    return img;
}

}  // namespace detail

// ---- simulate ----

struct SimulateResult {
    std::string measurement_path;
    std::string mask_path;       // fourier only
    std::string reference_path;  // normalized ground truth
};

inline SimulateResult run_simulate(const Config& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    uint64_t seed = uint64_t(cfg.get_int("seed", 0));
    ImageGrid truth = load_image(cfg.get_string("input.image"));
    std::string kind = cfg.get_string("model.kind");

    SimulateResult out;
    std::map<std::string, std::string> manifest(cfg.all().begin(), cfg.all().end());
    manifest["seed"] = std::to_string(seed);
    out.reference_path = out_dir + "/reference.f64";
    write_f64(out.reference_path, truth);

    if (kind == "convolution") {
        StencilKernel psf = detail::psf_from_config(cfg);
        MixedPoissonGaussian noise{cfg.get_double("noise.gamma_p", 10.0),
                                   cfg.get_double("noise.sigma_eta", 1.0)};
        ImageGrid m = tirf_simulate(truth, psf, noise, seed);
        out.measurement_path = out_dir + "/measurement.f64";
        write_f64(out.measurement_path, m);
        write_f64(out_dir + "/psf.f64", detail::psf_to_image(psf));
        manifest["resolved.psf_file"] = out_dir + "/psf.f64";
    } else if (kind == "fourier") {
        std::string mk = cfg.get_string("model.mask.kind", "random");
        MaskKind mkind;
        if (mk == "random")
            mkind = MaskKind::VariableDensityRandom;
        else if (mk == "spiral")
            mkind = MaskKind::SpiralWithCenterFill;
        else
            throw config_error("model.mask.kind", "expected random or spiral");
        double density = cfg.get_double("model.mask.density");
        if (!(density > 0) || density > 1) throw config_error("model.mask.density", "outside (0,1]");
        ImageGrid mask = make_mask(mkind, truth.width, truth.height, density, seed);
        CalibratedComplexGaussian noise{cfg.get_double("noise.target_psnr_db", 20.0)};
        ComplexGrid mhat = mri_simulate(truth, mask, noise, seed);
        out.measurement_path = out_dir + "/measurement.c64";
        out.mask_path = out_dir + "/mask.pgm";
        write_c64(out.measurement_path, mhat);
        write_mask_pgm(out.mask_path, mask);
    } else {
        throw config_error("model.kind", "expected convolution or fourier");
    }
    detail::write_manifest(out_dir + "/manifest.txt", manifest);
    return out;
}

// ---- restore ----

struct RestoreResult {
    ImageGrid restored;
    std::optional<ImageGrid> beta;
    std::vector<BcdTraceRow> trace;
    Preset preset = Preset::Corosa;
    double elapsed_seconds = 0;
    std::map<std::string, std::string> manifest;
};

inline RestoreResult run_restore(const Config& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);

    Preset preset = parse_preset(cfg.get_string("method.preset"));
    std::string kind = cfg.get_string("model.kind");
    bool fourier = kind == "fourier";
    if (!fourier && kind != "convolution") throw config_error("model.kind", "expected convolution or fourier");

    int K = (preset == Preset::Corosa || preset == Preset::CorosaI)
                ? int(cfg.get_int("solver.levels", 4))
                : 0;
    if (K < 0) throw config_error("solver.levels", "must be >= 0");

    AdmmConfig acfg;
    acfg.lambda = cfg.get_double("solver.lambda", 0.01);
    acfg.gamma = cfg.get_double("solver.gamma", 1.0);
    acfg.max_iters = int(cfg.get_int("solver.admm_iters", 100));
    acfg.cg_max_iters = int(cfg.get_int("solver.cg_iters", 50));
    acfg.cg_rel_tol = cfg.get_double("solver.cg_tol", 1e-6);
    acfg.primal_tol = cfg.get_double("solver.primal_tol", 1e-4);
    switch (preset) {
        case Preset::Tv1:
        case Preset::Tv2:
        case Preset::Cotv: acfg.p = 2; break;
        case Preset::Hs:
        case Preset::Cohs: acfg.p = 1; break;
        default: acfg.p = int(cfg.get_int("method.p", 1));
    }

    std::map<std::string, std::string> manifest(cfg.all().begin(), cfg.all().end());

    // measurement, model, normalization
    ForwardModel model = fourier ? ForwardModel::fourier(read_mask_pgm(cfg.get_string("model.mask.file")))
                                 : ForwardModel::convolution(detail::psf_from_config(cfg));
    int orig_w, orig_h;
    double scale;
    Measurement meas;
    if (fourier) {
        ComplexGrid mhat = read_c64(cfg.get_string("measurement"));
        orig_w = mhat.width;
        orig_h = mhat.height;
        if (orig_w % (1 << K) || orig_h % (1 << K))
            throw config_error("solver.levels", "fourier measurement dims must be divisible by 2^K");
        std::string sc = cfg.get_string("model.scale", "auto");
        if (sc == "auto") {
            DataTerm probe(model, mhat);
            scale = max_abs(probe.baseline());
        } else {
            scale = cfg.get_double("model.scale");
        }
        if (!(scale > 0)) scale = 1.0;
        for (auto& z : mhat.data) z /= scale;
        meas = std::move(mhat);
    } else {
        ImageGrid m = read_f64(cfg.get_string("measurement"));
        orig_w = m.width;
        orig_h = m.height;
        std::string sc = cfg.get_string("model.scale", "auto");
        if (sc == "auto")
            scale = cfg.has("noise.gamma_p") ? cfg.get_double("noise.gamma_p") : max_abs(m);
        else
            scale = cfg.get_double("model.scale");
        if (!(scale > 0)) scale = 1.0;
        for (double& v : m.data) v /= scale;
        m = pad_to_multiple(m, 1 << K);
        meas = std::move(m);
    }
    manifest["resolved.scale"] = format_double(scale);

    DataTerm data(model, std::move(meas));
    ImageGrid baseline = clamp(data.baseline(), 0.0, std::numeric_limits<double>::infinity());
    std::string uc = cfg.get_string("solver.u", "auto");
    acfg.u = uc == "auto" ? std::max(1.2 * max_abs(data.baseline()), 1e-6) : cfg.get_double("solver.u");
    acfg.validate();
    manifest["resolved.u"] = format_double(acfg.u);
    manifest["resolved.p"] = std::to_string(acfg.p);
    manifest["resolved.levels"] = std::to_string(K);
    manifest["resolved.lambda"] = format_double(acfg.lambda);
    manifest["resolved.gamma"] = format_double(acfg.gamma);

    PyramidSchedule sched;
    sched.K = K;
    sched.base = acfg;

    RestoreResult out;
    out.preset = preset;
    switch (preset) {
        case Preset::Tv1: {
            MultiresResult r = multires_init(data, sched, BetaPolicy::fixed(ImageGrid(data.width(), data.height(), 1.0)));
            out.restored = std::move(r.s);
            for (const auto& li : r.levels)
                out.trace.push_back({li.level, 's', li.objective_out, li.data_fit, li.lambda_reg, 0.0, li.primal_residual});
            break;
        }
        case Preset::Tv2:
        case Preset::Hs: {
            MultiresResult r = multires_init(data, sched, BetaPolicy::fixed(ImageGrid(data.width(), data.height(), 0.0)));
            out.restored = std::move(r.s);
            for (const auto& li : r.levels)
                out.trace.push_back({li.level, 's', li.objective_out, li.data_fit, li.lambda_reg, 0.0, li.primal_residual});
            break;
        }
        case Preset::Cotv:
        case Preset::Cohs: {
            double b = constant_beta_search(clamp(baseline, 0.0, acfg.u), acfg.p);
            manifest["resolved.constant_beta"] = format_double(b);
            MultiresResult r = multires_init(data, sched, BetaPolicy::fixed(ImageGrid(data.width(), data.height(), b)));
            out.restored = std::move(r.s);
            for (const auto& li : r.levels)
                out.trace.push_back({li.level, 's', li.objective_out, li.data_fit, li.lambda_reg, 0.0, li.primal_residual});
            break;
        }
        case Preset::CorosaI: {
            MultiresResult r = multires_init(data, sched);
            out.restored = std::move(r.s);
            out.beta = std::move(r.beta);
            for (const auto& li : r.levels)
                out.trace.push_back({li.level, 's', li.objective_out, li.data_fit, li.lambda_reg, 0.0, li.primal_residual});
            break;
        }
        case Preset::Corosa: {
            MultiresResult r = multires_init(data, sched);
            int n_b = int(cfg.get_int("solver.bcd_cycles", 10));
            double rel_tol = cfg.get_double("solver.bcd_rel_tol", 1e-5);
            BcdResult b = bcd_solve(r.s, data, acfg, n_b, rel_tol);
            out.restored = std::move(b.s);
            out.beta = std::move(b.beta);
            out.trace = std::move(b.trace);
            if (b.descent_warning) manifest["resolved.descent_warning"] = "1";
            break;
        }
    }

    // crop back to the measurement footprint
    if (out.restored.width != orig_w || out.restored.height != orig_h) {
        out.restored = crop(out.restored, orig_w, orig_h);
        if (out.beta) out.beta = crop(*out.beta, orig_w, orig_h);
    }

    write_f64(out_dir + "/restored.f64", out.restored);
    write_pgm(out_dir + "/restored.pgm", out.restored, 65535);
    if (out.beta) write_f64(out_dir + "/beta.f64", *out.beta);
    detail::write_trace_csv(out_dir + "/trace.csv", out.trace);

    out.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", out.elapsed_seconds);
    manifest["elapsed_seconds"] = buf;
    detail::write_manifest(out_dir + "/manifest.txt", manifest);
    out.manifest = std::move(manifest);
    return out;
}

/// Lambda sweep: run the preset once per value (concurrently; solves are
/// independent), score against the reference, keep the best run's artifacts
/// at the output root. Ties go to the smaller lambda.
struct SweepEntry {
    double lambda = 0;
    double ssim_score = 0;
    double snr_score = 0;
    std::string dir;
};

inline SweepEntry run_restore_sweep(const Config& cfg, const std::string& out_dir,
                                    const std::vector<double>& lambdas) {
    namespace fs = std::filesystem;
    if (lambdas.empty()) throw config_error("lambda-grid", "empty grid");
    ImageGrid ref = load_image(cfg.get_string("reference"));
    fs::create_directories(out_dir);

    std::vector<std::future<RestoreResult>> jobs;
    std::vector<std::string> dirs;
    for (double lam : lambdas) {
        Config sub = cfg;
        sub.set("solver.lambda", format_double(lam));
        char tag[24];
        std::snprintf(tag, sizeof tag, "%g", lam);
        std::string dir = out_dir + "/lambda_" + tag;
        dirs.push_back(dir);
        jobs.push_back(std::async(std::launch::async, [sub, dir]() { return run_restore(sub, dir); }));
    }

    std::ofstream csv(out_dir + "/sweep.csv");
    csv << "lambda,ssim,snr_db\n";
    SweepEntry best;
    best.ssim_score = -2;
    for (size_t i = 0; i < lambdas.size(); ++i) {
        RestoreResult r = jobs[i].get();
        double s = ssim(ref, r.restored);
        double n = snr_db(ref, r.restored);
        csv << format_double(lambdas[i]) << "," << format_double(s) << "," << format_double(n) << "\n";
        if (s > best.ssim_score) best = {lambdas[i], s, n, dirs[i]};
    }

    for (const char* name : {"restored.f64", "restored.pgm", "beta.f64", "trace.csv", "manifest.txt"}) {
        fs::path src = fs::path(best.dir) / name;
        if (fs::exists(src)) fs::copy_file(src, fs::path(out_dir) / name, fs::copy_options::overwrite_existing);
    }
    return best;
}

// ---- evaluate ----

struct EvaluateResult {
    double ssim_score = 0;
    double snr_score = 0;
};

inline EvaluateResult run_evaluate(const Config& cfg) {
    namespace fs = std::filesystem;
    ImageGrid ref = load_image(cfg.get_string("evaluate.ref"));
    std::string est_path = cfg.get_string("evaluate.est");
    ImageGrid est = load_image(est_path);
    if (!ref.same_dims(est)) throw std::invalid_argument("evaluate: dimension mismatch between ref and est");

    EvaluateResult r{ssim(ref, est), snr_db(ref, est)};

    // method/params from the estimate's run manifest when present
    std::map<std::string, std::string> man;
    std::string man_path = cfg.get_string("evaluate.manifest",
                                          (fs::path(est_path).parent_path() / "manifest.txt").string());
    if (fs::exists(man_path)) man = Config::from_file(man_path).all();
    auto field = [&man](const std::string& k) {
        auto it = man.find(k);
        return it == man.end() ? std::string("-") : it->second;
    };

    std::string csv_path = cfg.get_string("evaluate.csv");
    bool fresh = !fs::exists(csv_path) || fs::file_size(csv_path) == 0;
    std::ofstream f(csv_path, std::ios::app);
    if (!f) throw std::runtime_error("cannot open for append: " + csv_path);
    if (fresh) f << "image,method,lambda,gamma,p,K,ssim,snr_db,seconds\n";
    f << cfg.get_string("evaluate.image", cfg.get_string("evaluate.ref")) << ","
      << cfg.get_string("evaluate.method", field("method.preset")) << ","
      << field("resolved.lambda") << "," << field("resolved.gamma") << "," << field("resolved.p")
      << "," << field("resolved.levels") << "," << format_double(r.ssim_score) << ","
      << format_double(r.snr_score) << "," << field("elapsed_seconds") << "\n";
    return r;
}

}  // namespace corosa
