#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "corosa/grid.hpp"

namespace corosa {

namespace detail {

// FFTW planning is not thread-safe; execution on distinct buffers is.
// Plans are cached per (height, width, sign) with FFTW_ESTIMATE so runs
// are bit-reproducible, and FFTW_UNALIGNED so std::vector storage works
// with the new-array execute interface.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    void execute(const ComplexGrid& in, ComplexGrid& out, int sign) {
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto key = std::make_tuple(in.height, in.width, sign);
            auto it = plans_.find(key);
            if (it == plans_.end()) {
                ComplexGrid dummy_in(in.width, in.height), dummy_out(in.width, in.height);
                plan = fftw_plan_dft_2d(in.height, in.width,
                                        reinterpret_cast<fftw_complex*>(dummy_in.data.data()),
                                        reinterpret_cast<fftw_complex*>(dummy_out.data.data()),
                                        sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
                plans_.emplace(key, plan);
            } else {
                plan = it->second;
            }
        }
        fftw_execute_dft(plan,
                         reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data.data())),
                         reinterpret_cast<fftw_complex*>(out.data.data()));
    }

private:
    FftPlans() = default;
    ~FftPlans() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace detail

/// Unitary 2D DFT: Parseval-preserving, ifft2(fft2(x)) == x.
inline ComplexGrid fft2(const ComplexGrid& in) {
    ComplexGrid out(in.width, in.height);
    detail::FftPlans::instance().execute(in, out, FFTW_FORWARD);
    double scale = 1.0 / std::sqrt(double(in.size()));
    for (auto& z : out.data) z *= scale;
    return out;
}

inline ComplexGrid ifft2(const ComplexGrid& in) {
    ComplexGrid out(in.width, in.height);
    detail::FftPlans::instance().execute(in, out, FFTW_BACKWARD);
    double scale = 1.0 / std::sqrt(double(in.size()));
    for (auto& z : out.data) z *= scale;
    return out;
}

inline ComplexGrid fft2(const ImageGrid& in) { return fft2(ComplexGrid(in)); }

}  // namespace corosa
