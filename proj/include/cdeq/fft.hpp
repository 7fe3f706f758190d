// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_FFT_HPP
#define CDEQ_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace cdeq {

using cplx = std::complex<double>;

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Direction of the exponent: Forward is exp(-j2πkn/N), Backward exp(+j2πkn/N).
enum class FftDirection { Forward, Backward };

/// Unnormalized in-place complex DFT of fixed length, backed by an FFTW plan.
/// One plan per object; execute() is safe to call from the owning thread only.
class FftPlan {
public:
    FftPlan(std::size_t n, FftDirection dir) : n_(n), buffer_(n) {
        if (n == 0) {
            throw std::invalid_argument("FftPlan: zero length");
        }
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto* io = reinterpret_cast<fftw_complex*>(buffer_.data());
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), io, io,
                                 dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                 FFTW_ESTIMATE);
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    FftPlan(FftPlan&& other) noexcept
        : n_(other.n_), buffer_(std::move(other.buffer_)), plan_(other.plan_) {
        other.plan_ = nullptr;
    }
    FftPlan& operator=(FftPlan&& other) noexcept {
        if (this != &other) {
            destroy();
            n_ = other.n_;
            buffer_ = std::move(other.buffer_);
            plan_ = other.plan_;
            other.plan_ = nullptr;
        }
        return *this;
    }
    ~FftPlan() { destroy(); }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    /// Working buffer; fill, call execute(), read back.
    [[nodiscard]] std::span<cplx> buffer() noexcept { return buffer_; }

    void execute() noexcept { fftw_execute(plan_); }

private:
    void destroy() noexcept {
        if (plan_ != nullptr) {
            std::lock_guard lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan_);
            plan_ = nullptr;
        }
    }

    std::size_t n_;
    std::vector<cplx> buffer_;
    fftw_plan plan_{nullptr};
};

/// One-shot unnormalized DFT.
inline std::vector<cplx> dft(std::span<const cplx> x, FftDirection dir) {
    FftPlan plan(x.size(), dir);
    auto buf = plan.buffer();
    std::copy(x.begin(), x.end(), buf.begin());
    plan.execute();
    return {buf.begin(), buf.end()};
}

} // namespace cdeq

#endif // CDEQ_FFT_HPP
