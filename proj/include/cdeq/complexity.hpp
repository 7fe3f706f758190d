// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_COMPLEXITY_HPP
#define CDEQ_COMPLEXITY_HPP

#include <cdeq/error.hpp>

#include <cmath>
#include <numbers>

namespace cdeq {

/// Real multiplications per input sample.
struct ComplexityReport {
    int n_iir{0};
    int M{0};
    int K{0};
    static constexpr int kappa = 2;
    double c_iir{0.0};
    double c_fb_iir{0.0};
    double m_opt{0.0};
    double c_opt{0.0};
};

[[nodiscard]] inline double complexity_iir(int n_iir) noexcept { return 4.0 * (n_iir + 1); }

/// Analysis + synthesis bank plus sub-band IIR sections running at 2/M of the input rate.
[[nodiscard]] inline double complexity_fb_iir(int n_iir, double M, int K) noexcept {
    return 4.0 * std::log2(M) - 6.0 + 8.0 * K + 8.0 * ComplexityReport::kappa * n_iir / M;
}

/// Stationary point of complexity_fb_iir in M.
[[nodiscard]] inline double optimal_subbands(int n_iir) noexcept {
    return 2.0 * ComplexityReport::kappa * n_iir * std::numbers::ln2;
}

[[nodiscard]] inline ComplexityReport complexity_report(int n_iir, int M, int K) {
    if (n_iir <= 0 || M <= 0 || K <= 0) {
        throw InvalidParameter("complexity_report: N_IIR, M and K must be positive");
    }
    ComplexityReport r;
    r.n_iir = n_iir;
    r.M = M;
    r.K = K;
    r.c_iir = complexity_iir(n_iir);
    r.c_fb_iir = complexity_fb_iir(n_iir, M, K);
    r.m_opt = optimal_subbands(n_iir);
    r.c_opt = 4.0 * std::log2(r.m_opt) - 6.0 + 8.0 * K + 4.0 / std::numbers::ln2;
    return r;
}

} // namespace cdeq

#endif // CDEQ_COMPLEXITY_HPP
