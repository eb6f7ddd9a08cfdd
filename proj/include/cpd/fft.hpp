#pragma once

// Minimal RAII wrapper over an FFTW forward complex transform.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace cpd {

class ForwardFft {
public:
    explicit ForwardFft(std::size_t n) : n_(n) {
        buffer_ = fftw_alloc_complex(n_);
        if (!buffer_) throw std::bad_alloc();
        // The planner is not thread-safe; execution of distinct plans is.
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(n_), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
        if (!plan_) {
            fftw_free(buffer_);
            throw std::runtime_error("fftw: could not create plan");
        }
    }

    ~ForwardFft() {
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(buffer_);
    }

    ForwardFft(const ForwardFft &) = delete;
    ForwardFft &operator=(const ForwardFft &) = delete;

    std::size_t size() const noexcept { return n_; }

    /// out[k] = sum_j in[j] * exp(-2*pi*i*j*k/n)
    std::vector<std::complex<double>> operator()(std::span<const std::complex<double>> in) {
        if (in.size() != n_) throw std::invalid_argument("fft: size mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            buffer_[i][0] = in[i].real();
            buffer_[i][1] = in[i].imag();
        }
        fftw_execute(plan_);
        std::vector<std::complex<double>> out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = {buffer_[i][0], buffer_[i][1]};
        return out;
    }

private:
    static std::mutex &planner_mutex() {
        static std::mutex m;
        return m;
    }

    std::size_t n_;
    fftw_complex *buffer_ = nullptr;
    fftw_plan plan_ = nullptr;
};

} // namespace cpd
