// Acceptance suite: one check per criterion, one pass/fail line each.
// Usage: acceptance [path-to-corosa-cli] [work-dir]
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>

#include "corosa/restore.hpp"
#include "support/oracles.hpp"
#include "support/phantoms.hpp"
#include "support/tv2_oracle.hpp"

using namespace corosa;
namespace fs = std::filesystem;

namespace {

struct Checker {
    int failed = 0;
    void run(int idx, const std::string& name, const std::function<void()>& body) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            body();
            double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::printf("[PASS] %2d. %s (%.1f s)\n", idx, name.c_str(), dt);
        } catch (const std::exception& e) {
            ++failed;
            std::printf("[FAIL] %2d. %s: %s\n", idx, name.c_str(), e.what());
        }
        std::fflush(stdout);
    }
};

void expect(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    expect(bool(f), "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string drop_elapsed_lines(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("elapsed_seconds", 0) != 0) out << line << "\n";
    return out.str();
}

void expect_same_file(const std::string& a, const std::string& b) {
    expect(slurp(a) == slurp(b), a + " and " + b + " differ");
}

double rel_l2(const ImageGrid& a, const ImageGrid& b) {
    double num = 0;
    for (size_t i = 0; i < a.size(); ++i) num += std::pow(a.data[i] - b.data[i], 2);
    return std::sqrt(num) / std::max(norm2(b), 1e-300);
}

// shared problem for criteria 5/6: 64x64 mixed phantom observed through an
// impulse PSF with mixed Poisson/Gaussian noise, normalized by gamma_p
DataTerm denoising64(ImageGrid* truth_out = nullptr) {
    phantom::Mixed p = phantom::mixed(64);
    ImageGrid m = tirf_simulate(p.image, kernel_delta(), {10.0, 1.0}, 2024);
    for (double& v : m.data) v /= 10.0;
    if (truth_out) *truth_out = p.image;
    return DataTerm(ForwardModel::convolution(kernel_delta()), m);
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "";
    std::string work = argc > 2 ? argv[2] : "acceptance_work";
    fs::remove_all(work);
    fs::create_directories(work);
    Checker ck;

    ck.run(1, "beta closed form matches the golden-section oracle", [&] {
        auto t0 = std::chrono::steady_clock::now();
        auto g = oracle::rng(1001);
        std::uniform_real_distribution<double> ud(-1000.0, 1000.0);
        std::uniform_real_distribution<double> ue(-2.0, 2.0);
        double worst = 0;
        for (int t = 0; t < 10000; ++t) {
            double d = ud(g);
            double tau = std::pow(10.0, ue(g));
            double got = beta_solve_scalar(d, tau);
            double ref = oracle::golden_section(
                [&](double b) { return oracle::beta_objective(b, d, 0.0, tau); }, 1e-14, 1.0 - 1e-14);
            worst = std::max(worst, std::abs(got - ref));
            expect(std::abs(got - ref) <= 1e-6, "oracle gap " + std::to_string(std::abs(got - ref)));
            if (d > 0) expect(got < 0.5, "sign law: d > 0 needs beta < 0.5");
            if (d < 0) expect(got > 0.5, "sign law: d < 0 needs beta > 0.5");
            expect(beta_solve_scalar(0.0, tau) == 0.5, "d = 0 must give exactly 0.5");
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        expect(dt < 2.0, "runtime " + std::to_string(dt) + " s exceeds 2 s");
        std::printf("       worst |beta - oracle| = %.2e\n", worst);
    });

    ck.run(2, "prox maps beat 1000 random candidates per instance", [&] {
        auto g = oracle::rng(1002);
        std::uniform_real_distribution<double> u(-2, 2);
        std::uniform_real_distribution<double> ut(0, 1.5);
        std::normal_distribution<double> pert(0, 1);
        auto vec_obj = [](const std::array<double, 2>& y, const std::array<double, 2>& x, double t) {
            return 0.5 * (std::pow(y[0] - x[0], 2) + std::pow(y[1] - x[1], 2)) +
                   t * std::hypot(y[0], y[1]);
        };
        auto hs_obj = [](const std::array<double, 3>& y, const std::array<double, 3>& x, double t, int p) {
            double d = std::pow(y[0] - x[0], 2) + std::pow(y[1] - x[1], 2) + 2 * std::pow(y[2] - x[2], 2);
            return 0.5 * d + t * hess_eig_norm(y[0], y[1], y[2], p);
        };
        for (int inst = 0; inst < 100; ++inst) {
            double t = ut(g);
            std::array<double, 2> x{u(g), u(g)};
            auto y = vec_soft_threshold(x, t);
            double js = vec_obj(y, x, t);
            for (int c = 0; c < 1000; ++c) {
                double s = std::pow(10.0, -4.0 * (c % 5) / 4.0);
                std::array<double, 2> cand{y[0] + s * pert(g), y[1] + s * pert(g)};
                expect(js <= vec_obj(cand, x, t) + 1e-12, "vec prox beaten by a candidate");
            }
            for (int p : {1, 2}) {
                std::array<double, 3> xv{u(g), u(g), u(g)};
                auto yv = hs_prox(xv, t, p);
                double jsv = hs_obj(yv, xv, t, p);
                for (int c = 0; c < 1000; ++c) {
                    double s = std::pow(10.0, -4.0 * (c % 5) / 4.0);
                    std::array<double, 3> cand{yv[0] + s * pert(g), yv[1] + s * pert(g), yv[2] + s * pert(g)};
                    expect(jsv <= hs_obj(cand, xv, t, p) + 1e-12, "hs prox beaten by a candidate");
                }
            }
        }
    });

    ck.run(3, "adjoint identities across all operator pairs", [&] {
        auto g = oracle::rng(1003);
        auto check = [&](const std::function<ImageGrid(const ImageGrid&)>& fwd,
                         const std::function<ImageGrid(const ImageGrid&)>& adj, int in_w, int in_h,
                         const char* label) {
            for (int t = 0; t < 20; ++t) {
                ImageGrid x = oracle::random_grid(in_w, in_h, g);
                ImageGrid ax = fwd(x);
                ImageGrid y = oracle::random_grid(ax.width, ax.height, g);
                double lhs = dot(ax, y), rhs = dot(x, adj(y));
                expect(oracle::rel_diff(lhs, rhs) < 1e-10, std::string(label) + " adjoint identity failed");
            }
        };
        ImageGrid beta = oracle::random_grid(16, 16, g, 0.05, 0.95);
        for (int c = 0; c < 2; ++c)
            check([&, c](const ImageGrid& x) { return grad(x).ch[c]; },
                  [&, c](const ImageGrid& y) {
                      VectorField v(y.width, y.height, 2);
                      v.ch[c] = y;
                      return grad_adjoint(v);
                  },
                  16, 16, "grad");
        for (int c = 0; c < 3; ++c)
            check([&, c](const ImageGrid& x) { return hess(x).ch[c]; },
                  [&, c](const ImageGrid& y) {
                      VectorField v(y.width, y.height, 3);
                      v.ch[c] = y;
                      return hess_adjoint(v);
                  },
                  16, 16, "hess");
        for (int c = 0; c < 2; ++c)
            check([&, c](const ImageGrid& x) { return weighted_grad(x, beta).ch[c]; },
                  [&, c](const ImageGrid& y) {
                      VectorField v(y.width, y.height, 2);
                      v.ch[c] = y;
                      return weighted_grad_adjoint(v, beta);
                  },
                  16, 16, "weighted_grad");
        for (int c = 0; c < 3; ++c)
            check([&, c](const ImageGrid& x) { return weighted_hess(x, beta).ch[c]; },
                  [&, c](const ImageGrid& y) {
                      VectorField v(y.width, y.height, 3);
                      v.ch[c] = y;
                      return weighted_hess_adjoint(v, beta);
                  },
                  16, 16, "weighted_hess");
        for (int j = 1; j <= 3; ++j)
            check([j](const ImageGrid& x) { return upsample_j(x, j); },
                  [j](const ImageGrid& y) { return upsample_j_adjoint(y, j); }, 4, 4, "upsample_j");
        StencilKernel k = make_gaussian_psf(1.3, 4);
        check([&](const ImageGrid& x) { return conv2_periodic(x, k); },
              [&](const ImageGrid& y) { return conv2_periodic(y, kernel_flip(k)); }, 16, 16,
              "conv2_periodic");
        ForwardModel conv = ForwardModel::convolution(make_gaussian_psf(2.0, 6));
        check([&](const ImageGrid& x) { return std::get<ImageGrid>(apply_H(x, conv)); },
              [&](const ImageGrid& y) { return apply_Ht(y, conv); }, 16, 16, "H (convolution)");
        ImageGrid mask = make_mask(MaskKind::VariableDensityRandom, 16, 16, 0.4, 5);
        ForwardModel four = ForwardModel::fourier(mask);
        std::uniform_real_distribution<double> ur(-1, 1);
        for (int t = 0; t < 20; ++t) {
            ImageGrid x = oracle::random_grid(16, 16, g);
            ComplexGrid y(16, 16);
            for (auto& z : y.data) z = {ur(g), ur(g)};
            ComplexGrid hx = std::get<ComplexGrid>(apply_H(x, four));
            double lhs = 0;
            for (size_t i = 0; i < hx.size(); ++i) lhs += (hx.data[i] * std::conj(y.data[i])).real();
            expect(oracle::rel_diff(lhs, dot(x, apply_Ht(y, four))) < 1e-10,
                   "H (fourier) adjoint identity failed");
        }
    });

    ck.run(4, "preconditioner matches dense operator; PCG beats plain CG", [&] {
        auto dense_op = [](const ImageGrid& e, int j) {
            ImageGrid t = upsample_j(e, j);
            ImageGrid acc = t;
            axpy(1.0, grad_adjoint(grad(t)), acc);
            VectorField h = hess(t);
            h.ch[2] = scaled(h.ch[2], 2.0);
            axpy(1.0, hess_adjoint(h), acc);
            return upsample_j_adjoint(acc, j);
        };
        auto g = oracle::rng(1004);
        for (int j : {0, 1, 2}) {
            int n = 32, nc = n >> j;
            Preconditioner prec(n, n, j);
            oracle::DenseOp dense(nc, nc, [&](const ImageGrid& e) { return dense_op(e, j); });
            for (int t = 0; t < 5; ++t) {
                ImageGrid x = oracle::random_grid(nc, nc, g);
                expect(oracle::max_abs_diff(prec.apply_forward(x), dense.apply(x)) < 1e-9,
                       "filter/dense mismatch at j=" + std::to_string(j));
            }
        }

        int n = 64, j = 1, nc = n >> j;
        ImageGrid m = oracle::random_grid(n, n, g, 0.0, 1.0);
        DataTerm data(ForwardModel::convolution(kernel_delta()), m);
        ImageGrid beta(n, n, 0.5);
        detail::SystemOperator A{data, beta, j, 1.0};
        Preconditioner prec(n, n, j);
        ImageGrid x_true = oracle::random_grid(nc, nc, g);
        ImageGrid rhs = A.apply(x_true);
        auto iters_to = [&](const Preconditioner* p) {
            for (int it = 1; it <= 3000; ++it) {
                CgResult r = pcg_solve(A, rhs, ImageGrid(nc, nc, 0.0), it, 1e-16, p);
                if (rel_l2(r.x, x_true) <= 1e-6) return it;
            }
            return 3001;
        };
        int with = iters_to(&prec), without = iters_to(nullptr);
        std::printf("       pcg %d iterations vs cg %d\n", with, without);
        expect(with <= 3000, "pcg failed to reach 1e-6");
        expect(with <= without, "pcg took more iterations than cg");
    });

    ck.run(5, "admm inner solve: primal residual and enforced descent", [&] {
        DataTerm data = denoising64();
        ImageGrid baseline = clamp(data.baseline(), 0.0, 1.2 * max_value(data.baseline()));
        AdmmConfig cfg;
        cfg.lambda = 0.05;
        cfg.u = 1.2 * max_value(data.baseline());
        cfg.p = 1;
        cfg.max_iters = 300;
        cfg.primal_tol = 1e-3;
        ImageGrid beta = adaptive_beta(baseline, cfg.p);
        AdmmResult r = admm_solve(baseline, beta, data, 0, cfg);
        expect(r.iters <= 300, "iteration budget exceeded");
        expect(r.primal_residual <= 1e-3,
               "primal residual " + std::to_string(r.primal_residual) + " after " +
                   std::to_string(r.iters) + " iterations");
        expect(r.objective_out <= r.objective_init, "objective increased over the initializer");
        expect(!r.fell_back, "solver had to fall back to the initializer");
        std::printf("       residual %.2e in %d iterations\n", r.primal_residual, r.iters);
    });

    ck.run(6, "bcd trace is non-increasing over 5 cycles", [&] {
        DataTerm data = denoising64();
        AdmmConfig cfg;
        cfg.lambda = 0.05;
        cfg.u = 1.2 * max_value(data.baseline());
        cfg.p = 1;
        cfg.max_iters = 60;
        PyramidSchedule sched;
        sched.K = 2;
        sched.base = cfg;
        MultiresResult init = multires_init(data, sched);
        BcdResult b = bcd_solve(init.s, data, cfg, 5, 1e-15);
        expect(!b.descent_warning, "descent warning raised");
        expect(b.cycles_run >= 5, "expected 5 cycles, ran " + std::to_string(b.cycles_run));
        for (size_t i = 1; i < b.trace.size(); ++i)
            expect(b.trace[i].objective <= b.trace[i - 1].objective + 1e-9,
                   "J increased at trace row " + std::to_string(i));
        std::printf("       J: %.6f -> %.6f over %zu half-steps\n", b.trace.front().objective,
                    b.trace.back().objective, b.trace.size());
    });

    ck.run(7, "tv2 preset equals the smoothed gradient-descent oracle", [&] {
        phantom::Mixed p = phantom::mixed(32);
        ImageGrid m = tirf_simulate(p.image, kernel_delta(), {25.0, 0.5}, 77);
        for (double& v : m.data) v /= 25.0;
        DataTerm data(ForwardModel::convolution(kernel_delta()), m);
        double u = 1.2 * max_value(data.baseline());
        double lambda = 0.02;
        AdmmConfig cfg;
        cfg.lambda = lambda;
        cfg.p = 2;
        cfg.u = u;
        cfg.max_iters = 2000;
        cfg.primal_tol = 1e-7;
        cfg.cg_max_iters = 60;
        cfg.cg_rel_tol = 1e-9;
        AdmmResult admm = admm_solve(ImageGrid(32, 32, 0.0), ImageGrid(32, 32, 0.0), data, 0, cfg);
        oracle::Tv2Result ref = oracle::tv2_smoothed_solve(data, lambda, u, 1e-9, 30000);
        double rel = rel_l2(admm.s, ref.s);
        std::printf("       relative l2 gap %.2e\n", rel);
        expect(rel < 1e-3, "gap " + std::to_string(rel));
    });

    ck.run(8, "adaptation ordering on the mixed phantom (lambda sweeps)", [&] {
        auto t0 = std::chrono::steady_clock::now();
        phantom::Mixed p = phantom::mixed(128);
        StencilKernel psf = make_gaussian_psf(2.0, 8);
        ImageGrid m = tirf_simulate(p.image, psf, {10.0, 1.0}, 31415);
        for (double& v : m.data) v /= 10.0;
        DataTerm data(ForwardModel::convolution(psf), m);
        double u = 1.2 * max_value(data.baseline());

        auto run_method = [&](const std::string& method, double lambda) {
            AdmmConfig cfg;
            cfg.lambda = lambda;
            cfg.u = u;
            cfg.max_iters = 150;
            cfg.cg_max_iters = 25;
            cfg.primal_tol = 1e-5;
            std::optional<ImageGrid> beta_map;
            ImageGrid s;
            if (method == "corosa") {
                cfg.p = 1;
                PyramidSchedule sched;
                sched.K = 4;
                sched.base = cfg;
                MultiresResult init = multires_init(data, sched);
                BcdResult b = bcd_solve(init.s, data, cfg, 6, 1e-7);
                s = b.s;
                beta_map = b.beta;
            } else {
                cfg.p = method == "hs" ? 1 : 2;
                double fixed = method == "tv1" ? 1.0 : 0.0;
                PyramidSchedule sched;
                sched.K = 0;
                sched.base = cfg;
                MultiresResult r =
                    multires_init(data, sched, BetaPolicy::fixed(ImageGrid(128, 128, fixed)));
                s = r.s;
            }
            return std::pair(ssim(p.image, s), beta_map);
        };

        const std::vector<double> grid{0.05, 0.1, 0.2, 0.4, 0.8};
        std::map<std::string, double> best;
        ImageGrid best_beta;
        for (const std::string method : {"tv1", "hs", "corosa"}) {
            std::vector<std::future<std::pair<double, std::optional<ImageGrid>>>> jobs;
            for (double lam : grid)
                jobs.push_back(std::async(std::launch::async, run_method, method, lam));
            double best_s = -2;
            for (size_t i = 0; i < grid.size(); ++i) {
                auto [s, beta] = jobs[i].get();
                if (s > best_s) {
                    best_s = s;
                    if (beta) best_beta = *beta;
                }
            }
            best[method] = best_s;
            std::printf("       %s best ssim %.4f\n", method.c_str(), best_s);
        }
        expect(best["corosa"] >= std::max(best["tv1"], best["hs"]) - 0.005,
               "corosa not within 0.005 of the best baseline");
        double flat_mean = phantom::masked_mean(best_beta, p.flat_mask);
        double quad_mean = phantom::masked_mean(best_beta, p.quad_mask);
        std::printf("       mean beta: flat %.3f, quadratic %.3f\n", flat_mean, quad_mean);
        expect(flat_mean > 0.5, "mean beta on the flat region is not > 0.5");
        expect(quad_mean < 0.5, "mean beta on the quadratic region is not < 0.5");
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        expect(dt < 300.0, "runtime " + std::to_string(dt) + " s exceeds 5 minutes");
    });

    ck.run(9, "mri noise calibration: 20 +- 0.2 dB over 20 trials", [&] {
        auto g = oracle::rng(1009);
        ImageGrid s = oracle::random_grid(64, 64, g, 0.0, 1.0);
        ImageGrid ones(64, 64, 1.0);
        double peak = max_value(s);
        double acc = 0;
        for (int t = 0; t < 20; ++t) {
            ComplexGrid m = mri_simulate(s, ones, {20.0}, 5000 + uint64_t(t));
            ComplexGrid back = ifft2(m);
            double err = 0;
            for (size_t i = 0; i < back.size(); ++i) err += std::norm(back.data[i] - s.data[i]);
            acc += 10.0 * std::log10(peak * peak * double(s.size()) / err);
        }
        double mean = acc / 20.0;
        std::printf("       measured %.3f dB\n", mean);
        expect(std::abs(mean - 20.0) <= 0.2, "mean PSNR " + std::to_string(mean));
    });

    ck.run(10, "cli determinism: byte-identical outputs on repeated runs", [&] {
        expect(!cli.empty(), "cli path not provided");
        phantom::Mixed p = phantom::mixed(64);
        std::string wd = work + "/determinism";
        fs::create_directories(wd);
        write_f64(wd + "/truth.f64", p.image);

        // identical config means identical output paths: re-run into the same
        // directory after snapshotting the first run's bytes
        auto rerun_and_compare = [&](const std::string& cmd, const std::string& dir,
                                     const std::vector<std::string>& files, bool manifest_elapsed) {
            expect(std::system(cmd.c_str()) == 0, "command failed: " + cmd);
            std::map<std::string, std::string> snapshot;
            for (const auto& f : files) snapshot[f] = slurp(dir + "/" + f);
            expect(std::system(cmd.c_str()) == 0, "command failed: " + cmd);
            for (const auto& f : files) {
                std::string again = slurp(dir + "/" + f);
                if (manifest_elapsed && f == "manifest.txt") {
                    expect(drop_elapsed_lines(snapshot[f]) == drop_elapsed_lines(again),
                           dir + "/manifest.txt differs beyond elapsed time");
                } else {
                    expect(snapshot[f] == again, dir + "/" + f + " differs between runs");
                }
            }
        };

        {
            std::ofstream f(wd + "/sim.cfg");
            f << "input.image = " << wd << "/truth.f64\nmodel.kind = convolution\n"
              << "model.psf.sigma = 2\nmodel.psf.radius = 8\n"
              << "noise.gamma_p = 10\nnoise.sigma_eta = 1\nseed = 7\n";
        }
        rerun_and_compare(cli + " simulate --config " + wd + "/sim.cfg --out " + wd + "/sim", wd + "/sim",
                          {"measurement.f64", "psf.f64", "reference.f64", "manifest.txt"}, false);

        {
            std::ofstream f(wd + "/sim_mri.cfg");
            f << "input.image = " << wd << "/truth.f64\nmodel.kind = fourier\n"
              << "model.mask.kind = spiral\nmodel.mask.density = 0.2\n"
              << "noise.target_psnr_db = 20\nseed = 3\n";
        }
        rerun_and_compare(cli + " simulate --config " + wd + "/sim_mri.cfg --out " + wd + "/mri",
                          wd + "/mri", {"measurement.c64", "mask.pgm", "manifest.txt"}, false);

        {
            std::ofstream f(wd + "/rest.cfg");
            f << "measurement = " << wd << "/sim/measurement.f64\nmodel.kind = convolution\n"
              << "model.psf.file = " << wd << "/sim/psf.f64\nnoise.gamma_p = 10\n"
              << "method.preset = corosa\nsolver.lambda = 0.05\nsolver.levels = 2\n"
              << "solver.bcd_cycles = 2\nsolver.admm_iters = 30\nseed = 7\n";
        }
        // manifests record wall time; everything else must match byte for byte
        rerun_and_compare(cli + " restore --config " + wd + "/rest.cfg --out " + wd + "/rest",
                          wd + "/rest",
                          {"restored.f64", "restored.pgm", "beta.f64", "trace.csv", "manifest.txt"},
                          true);

        // config validation exit code
        {
            std::ofstream f(wd + "/bad.cfg");
            f << "input.image = " << wd << "/truth.f64\nmodel.kind = fourier\n"
              << "model.mask.kind = random\nmodel.mask.density = 0\nseed = 1\n";
        }
        int rc = std::system((cli + " simulate --config " + wd + "/bad.cfg --out " + wd + "/bad 2>/dev/null").c_str());
        expect(WIFEXITED(rc) && WEXITSTATUS(rc) == 2, "density=0 should exit with code 2");
    });

    std::printf("%s: %d criterion(s) failed\n", ck.failed ? "FAILURE" : "SUCCESS", ck.failed);
    return ck.failed ? 1 : 0;
}
