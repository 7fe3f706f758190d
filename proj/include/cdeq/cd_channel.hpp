// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_CD_CHANNEL_HPP
#define CDEQ_CD_CHANNEL_HPP

#include <cdeq/error.hpp>
#include <cdeq/fft.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace cdeq {

inline constexpr double kSpeedOfLight = 2.99792458e8; // m/s

/// ps/(nm·km) -> s/m².
[[nodiscard]] constexpr double dispersion_to_si(double ps_per_nm_km) noexcept {
    return ps_per_nm_km * 1e-6;
}

/// Dimensionless dispersion coefficient of the sampled channel exp(-j·alpha·ω²).
/// `dispersion_ps_nm_km` is in engineering units; everything else is SI.
[[nodiscard]] inline double compute_alpha(double lambda0, double dispersion_ps_nm_km,
                                          double length, double sample_rate) {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!ok(lambda0) || !ok(dispersion_ps_nm_km) || !ok(length) || !ok(sample_rate) ||
        sample_rate <= 0.0) {
        throw InvalidParameter("compute_alpha: inputs must be finite and nonnegative, B > 0");
    }
    const double d = dispersion_to_si(dispersion_ps_nm_km);
    return lambda0 * lambda0 * sample_rate * sample_rate * d * length /
           (4.0 * std::numbers::pi * kSpeedOfLight);
}

/// Physical link parameters plus the derived alpha.
struct ChannelParams {
    double lambda0{};     // m
    double dispersion{};  // s/m²
    double length{};      // m
    double sample_rate{}; // samples/s
    double alpha{};       // rad

    static ChannelParams make(double lambda0, double dispersion_ps_nm_km, double length,
                              double sample_rate) {
        ChannelParams p;
        p.lambda0 = lambda0;
        p.dispersion = dispersion_to_si(dispersion_ps_nm_km);
        p.length = length;
        p.sample_rate = sample_rate;
        p.alpha = compute_alpha(lambda0, dispersion_ps_nm_km, length, sample_rate);
        return p;
    }
};

[[nodiscard]] inline cplx cd_response(double alpha, double omega) noexcept {
    return std::polar(1.0, -alpha * omega * omega);
}

/// Channel as seen by sub-band k' after decimation by M/2; alpha_prime = alpha·(2/M)².
[[nodiscard]] inline cplx subband_cd_response(double alpha_prime, int k_prime,
                                              double omega_prime) noexcept {
    const double u = omega_prime + k_prime * std::numbers::pi;
    return std::polar(1.0, -alpha_prime * u * u);
}

/// Bin n of a length-N transform mapped to [-π, π).
[[nodiscard]] inline double bin_frequency(std::size_t n, std::size_t len) noexcept {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(len);
    return w >= std::numbers::pi ? w - 2.0 * std::numbers::pi : w;
}

/// Applies the CD channel to a finite record with one length-N transform (circular).
/// A negative alpha gives the exact inverse channel.
[[nodiscard]] inline std::vector<cplx> apply_cd(std::span<const cplx> signal, double alpha) {
    if (signal.empty()) {
        throw InvalidParameter("apply_cd: empty signal");
    }
    if (!std::isfinite(alpha)) {
        throw InvalidParameter("apply_cd: non-finite alpha");
    }
    if (alpha == 0.0) {
        return {signal.begin(), signal.end()};
    }
    const std::size_t n = signal.size();
    auto spectrum = dft(signal, FftDirection::Forward);
    for (std::size_t i = 0; i < n; ++i) {
        spectrum[i] *= cd_response(alpha, bin_frequency(i, n));
    }
    auto out = dft(spectrum, FftDirection::Backward);
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out) {
        v *= scale;
    }
    return out;
}

} // namespace cdeq

#endif // CDEQ_CD_CHANNEL_HPP
