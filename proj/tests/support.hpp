// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_TESTS_SUPPORT_HPP
#define CDEQ_TESTS_SUPPORT_HPP

#include <cdeq/fft.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace cdeq::test {

// Reference link: 1550 nm, 16 ps/nm/km, 2000 km, 56 GS/s.
inline constexpr double kLambda0 = 1550e-9;
inline constexpr double kDispersion = 16.0;
inline constexpr double kLength = 2000e3;
inline constexpr double kSampleRate = 56e9;

inline std::vector<cplx> random_signal(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<cplx> x(n);
    for (auto& v : x) {
        v = {g(rng), g(rng)};
    }
    return x;
}

inline double energy(std::span<const cplx> x) {
    double e = 0.0;
    for (const auto& v : x) {
        e += std::norm(v);
    }
    return e;
}

inline double nmse(std::span<const cplx> ref, std::span<const cplx> x) {
    double e = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        e += std::norm(x[i] - ref[i]);
    }
    return e / energy(ref);
}

// O(N²) DFT with the forward sign convention e^{-j2πkn/N}.
inline std::vector<cplx> naive_dft(std::span<const cplx> x, double sign = -1.0) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        for (std::size_t i = 0; i < n; ++i) {
            const double a = sign * 2.0 * std::numbers::pi * static_cast<double>((k * i) % n) /
                             static_cast<double>(n);
            acc += x[i] * cplx{std::cos(a), std::sin(a)};
        }
        out[k] = acc;
    }
    return out;
}

} // namespace cdeq::test

#endif // CDEQ_TESTS_SUPPORT_HPP
