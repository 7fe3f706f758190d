// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_ALLPASS_HPP
#define CDEQ_ALLPASS_HPP

#include <cdeq/error.hpp>
#include <cdeq/fft.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cdeq {

/// Largest admissible pole radius.
inline constexpr double kRhoMax = 0.9999;

/// Wraps an angle to [-π, π).
[[nodiscard]] inline double wrap_angle(double a) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a + std::numbers::pi, two_pi);
    if (w < 0.0) {
        w += two_pi;
    }
    w -= std::numbers::pi;
    return w >= std::numbers::pi ? -std::numbers::pi : w;
}

/// First-order complex all-pass section (-ρe^{-jθ} + z⁻¹) / (1 - ρe^{jθ} z⁻¹).
class AllpassSection {
public:
    AllpassSection() = default;

    AllpassSection(double rho, double theta) : rho_(rho), theta_(wrap_angle(theta)) {
        if (!std::isfinite(rho) || !std::isfinite(theta) || rho < 0.0 || rho > kRhoMax) {
            throw InvalidParameter("AllpassSection: need 0 <= rho <= " + std::to_string(kRhoMax) +
                                   ", got rho=" + std::to_string(rho));
        }
    }

    [[nodiscard]] double rho() const noexcept { return rho_; }
    [[nodiscard]] double theta() const noexcept { return theta_; }

    /// Pole location ρe^{jθ}.
    [[nodiscard]] cplx pole() const noexcept { return std::polar(rho_, theta_); }

    friend bool operator==(const AllpassSection&, const AllpassSection&) = default;

private:
    double rho_{0.0};
    double theta_{0.0};
};

/// Ordered product of sections times e^{-jφ₀}.
struct AllpassCascade {
    std::vector<AllpassSection> sections;
    double phi0{0.0};
    std::optional<int> band;
};

[[nodiscard]] inline cplx section_response(const AllpassSection& s, double omega) noexcept {
    const cplx zinv = std::polar(1.0, -omega);
    const cplx a = s.pole();
    return (-std::conj(a) + zinv) / (1.0 - a * zinv);
}

/// Closed-form group delay (1-ρ²)/(1+ρ²-2ρcos(ω-θ)), in samples.
[[nodiscard]] inline double section_group_delay(const AllpassSection& s, double omega) noexcept {
    const double r = s.rho();
    return (1.0 - r * r) / (1.0 + r * r - 2.0 * r * std::cos(omega - s.theta()));
}

[[nodiscard]] inline cplx cascade_response(const AllpassCascade& c, double omega) noexcept {
    cplx acc = std::polar(1.0, -c.phi0);
    for (const auto& s : c.sections) {
        acc *= section_response(s, omega);
    }
    return acc;
}

[[nodiscard]] inline double cascade_group_delay(const AllpassCascade& c, double omega) noexcept {
    double acc = 0.0;
    for (const auto& s : c.sections) {
        acc += section_group_delay(s, omega);
    }
    return acc;
}

/// Unwrapped phase of the cascade on a sorted frequency grid. Each step is continued
/// to the nearest multiple of 2π, which is only valid while the true phase moves less
/// than π between neighbours; the group-delay bound is checked and a violation throws.
[[nodiscard]] inline std::vector<double> unwrapped_phase(const AllpassCascade& c,
                                                         std::span<const double> omega) {
    std::vector<double> phase(omega.size());
    if (omega.empty()) {
        return phase;
    }
    // Peak delay of a section is (1+ρ)/(1-ρ).
    double max_delay = 0.0;
    for (const auto& s : c.sections) {
        max_delay += (1.0 + s.rho()) / (1.0 - s.rho());
    }
    phase[0] = std::arg(cascade_response(c, omega[0]));
    for (std::size_t i = 1; i < omega.size(); ++i) {
        const double step = omega[i] - omega[i - 1];
        if (step <= 0.0) {
            throw ContractViolation("unwrapped_phase: grid must be strictly increasing");
        }
        if (max_delay * step >= std::numbers::pi) {
            throw ContractViolation("unwrapped_phase: grid too coarse for the cascade's group delay");
        }
        const double raw = std::arg(cascade_response(c, omega[i]));
        double d = raw - phase[i - 1];
        d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
        phase[i] = phase[i - 1] + d;
    }
    return phase;
}

/// Per-section memory for streaming: previous input and previous output.
struct AllpassState {
    std::vector<cplx> x_prev;
    std::vector<cplx> y_prev;

    AllpassState() = default;
    explicit AllpassState(std::size_t sections) : x_prev(sections), y_prev(sections) {}
    explicit AllpassState(const AllpassCascade& c) : AllpassState(c.sections.size()) {}
};

/// Recursion coefficients of a cascade, precomputed once for streaming.
struct AllpassCoefficients {
    std::vector<cplx> feedforward; // -ρe^{-jθ}
    std::vector<cplx> feedback;    // ρe^{jθ}
    cplx output_rotation{1.0};     // e^{-jφ₀}

    AllpassCoefficients() = default;
    explicit AllpassCoefficients(const AllpassCascade& c)
        : feedforward(c.sections.size()), feedback(c.sections.size()),
          output_rotation(std::polar(1.0, -c.phi0)) {
        for (std::size_t i = 0; i < c.sections.size(); ++i) {
            feedback[i] = c.sections[i].pole();
            feedforward[i] = -std::conj(feedback[i]);
        }
    }
    [[nodiscard]] std::size_t size() const noexcept { return feedback.size(); }
};

/// Runs the cascade over a chunk, carrying state across calls.
/// Per section: y[n] = -ρe^{-jθ}·x[n] + x[n-1] + ρe^{jθ}·y[n-1]; output scaled by e^{-jφ₀}.
/// `out` may alias `x`.
inline void filter_stream(const AllpassCoefficients& c, std::span<const cplx> x, std::span<cplx> out,
                          AllpassState& state) {
    const std::size_t ns = c.size();
    if (state.x_prev.size() != ns || state.y_prev.size() != ns) {
        throw ContractViolation("filter_stream: state sized for " +
                                std::to_string(state.x_prev.size()) + " sections, cascade has " +
                                std::to_string(ns));
    }
    if (out.size() != x.size()) {
        throw ContractViolation("filter_stream: output size mismatch");
    }
    for (std::size_t n = 0; n < x.size(); ++n) {
        cplx v = x[n];
        for (std::size_t i = 0; i < ns; ++i) {
            const cplx y = c.feedforward[i] * v + state.x_prev[i] + c.feedback[i] * state.y_prev[i];
            state.x_prev[i] = v;
            state.y_prev[i] = y;
            v = y;
        }
        out[n] = v * c.output_rotation;
    }
}

inline void filter_stream(const AllpassCascade& c, std::span<const cplx> x, std::span<cplx> out,
                          AllpassState& state) {
    filter_stream(AllpassCoefficients(c), x, out, state);
}

[[nodiscard]] inline std::vector<cplx> filter_stream(const AllpassCascade& c,
                                                     std::span<const cplx> x,
                                                     AllpassState& state) {
    std::vector<cplx> out(x.size());
    filter_stream(c, x, out, state);
    return out;
}

} // namespace cdeq

#endif // CDEQ_ALLPASS_HPP
