// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_EQUALIZER_DESIGN_HPP
#define CDEQ_EQUALIZER_DESIGN_HPP

#include <cdeq/allpass.hpp>
#include <cdeq/error.hpp>
#include <cdeq/filterbank.hpp>
#include <cdeq/optim.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace cdeq {

/// Uniform samples of [-π, π), endpoint excluded. Cos/sin tables are kept for the cost
/// kernels, which evaluate cos(ω-θ) by angle addition.
class FrequencyGrid {
public:
    static constexpr int kMinPoints = 512;

    explicit FrequencyGrid(int n_points = 2048) : n_(n_points) {
        if (n_points < kMinPoints) {
            throw InvalidParameter("FrequencyGrid: need at least 512 points");
        }
        omega_.resize(static_cast<std::size_t>(n_));
        cos_.resize(omega_.size());
        sin_.resize(omega_.size());
        for (int i = 0; i < n_; ++i) {
            const double w = -std::numbers::pi + spacing() * i;
            omega_[static_cast<std::size_t>(i)] = w;
            cos_[static_cast<std::size_t>(i)] = std::cos(w);
            sin_[static_cast<std::size_t>(i)] = std::sin(w);
        }
    }

    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] double spacing() const noexcept { return 2.0 * std::numbers::pi / n_; }
    [[nodiscard]] std::span<const double> omega() const noexcept { return omega_; }
    [[nodiscard]] std::span<const double> cos_omega() const noexcept { return cos_; }
    [[nodiscard]] std::span<const double> sin_omega() const noexcept { return sin_; }

private:
    int n_;
    std::vector<double> omega_, cos_, sin_;
};

struct WeightingSpec {
    enum class Kind { Uniform, RcSquared };

    Kind kind{Kind::Uniform};
    double omega_c{0.6 * std::numbers::pi}; // rad, sub-band domain
    double roll_off{0.1};

    static WeightingSpec uniform() { return {}; }
    static WeightingSpec rc_squared(double omega_c, double roll_off) {
        WeightingSpec w{Kind::RcSquared, omega_c, roll_off};
        w.validate();
        return w;
    }

    void validate() const {
        if (kind == Kind::RcSquared &&
            (!(omega_c > 0.0) || !(roll_off >= 0.0 && roll_off <= 1.0))) {
            throw InvalidParameter("WeightingSpec: need omega_c > 0 and roll_off in [0, 1]");
        }
    }

    /// Squared-magnitude RRC: 1 on |ω| <= ω_c(1-r), 0 beyond ω_c(1+r), raised cosine between.
    [[nodiscard]] double operator()(double omega) const noexcept {
        if (kind == Kind::Uniform) {
            return 1.0;
        }
        const double a = std::abs(omega);
        const double lo = omega_c * (1.0 - roll_off);
        const double hi = omega_c * (1.0 + roll_off);
        if (a <= lo) {
            return 1.0;
        }
        if (a >= hi) {
            return 0.0;
        }
        return 0.5 * (1.0 + std::cos(std::numbers::pi * (a - lo) / (hi - lo)));
    }
};

[[nodiscard]] inline const char* to_string(WeightingSpec::Kind k) noexcept {
    return k == WeightingSpec::Kind::Uniform ? "uniform" : "rc_squared";
}

/// Per-band design constants.
struct SubbandSpec {
    int k{0};
    int k_prime{0};
    double alpha_prime{0.0};
    int beta_prime{0};
    int N{0};

    friend bool operator==(const SubbandSpec&, const SubbandSpec&) = default;
};

/// k' = k for k <= M/2, k - M otherwise.
[[nodiscard]] constexpr int shifted_band_index(int k, int M) noexcept {
    return k <= M / 2 ? k : k - M;
}

[[nodiscard]] inline SubbandSpec subband_spec(double alpha, int M, int k) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw InvalidParameter("subband_spec: alpha must be finite and nonnegative");
    }
    if (M < 2 || M % 2 != 0) {
        throw InvalidParameter("subband_spec: M must be a positive even integer");
    }
    if (k < 0 || k >= M) {
        throw InvalidParameter("subband_spec: band index " + std::to_string(k) + " outside [0, " +
                               std::to_string(M) + ")");
    }
    SubbandSpec s;
    s.k = k;
    s.k_prime = shifted_band_index(k, M);
    s.alpha_prime = alpha * (2.0 / M) * (2.0 / M);
    s.beta_prime = static_cast<int>(std::ceil(2.0 * s.alpha_prime * (M / 2) * std::numbers::pi));
    const double n_real = -2.0 * std::numbers::pi * s.alpha_prime * s.k_prime + s.beta_prime;
    s.N = std::max(0, static_cast<int>(std::ceil(n_real)));
    return s;
}

/// Full-band baseline: α' = α, k' = 0, β = N = ceil(2πα).
[[nodiscard]] inline SubbandSpec fullband_spec(double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw InvalidParameter("fullband_spec: alpha must be finite and nonnegative");
    }
    SubbandSpec s;
    s.alpha_prime = alpha;
    s.beta_prime = static_cast<int>(std::ceil(2.0 * alpha * std::numbers::pi));
    s.N = s.beta_prime;
    return s;
}

[[nodiscard]] inline double desired_group_delay(const SubbandSpec& s, double omega) noexcept {
    return -2.0 * s.alpha_prime * (omega + s.k_prime * std::numbers::pi) + s.beta_prime;
}

[[nodiscard]] inline double desired_phase(const SubbandSpec& s, double omega, double phi0) noexcept {
    const double u = omega + s.k_prime * std::numbers::pi;
    return s.alpha_prime * u * u - s.beta_prime * u + phi0;
}

// ---------------------------------------------------------------------------
// Abel-Smith style initialisation (area method).

namespace detail {
// Linear inverse of a non-decreasing tabulated Φ on nodes w; returns the first crossing.
inline double invert_cumulative(std::span<const double> w, std::span<const double> phi, double target) {
    if (target <= phi.front()) {
        return w.front();
    }
    if (target >= phi.back()) {
        return w.back();
    }
    const auto it = std::lower_bound(phi.begin(), phi.end(), target);
    const auto j = static_cast<std::size_t>(it - phi.begin());
    const double dphi = phi[j] - phi[j - 1];
    const double t = dphi > 0.0 ? (target - phi[j - 1]) / dphi : 0.0;
    return w[j - 1] + t * (w[j] - w[j - 1]);
}
} // namespace detail

/// Places `n_sections` poles for a tabulated non-negative delay target. `delay` holds
/// the target on the n+1 nodes -π + iΔ, i = 0..n (last node is ω = π).
/// Band edges split the cumulative area into 2π slices, the pole angle sits at the
/// slice's area midpoint, and ρ = (τ̄-1)/(τ̄+1) matches the section's peak delay to the
/// slice's mean delay τ̄.
[[nodiscard]] inline std::vector<AllpassSection> abel_smith_from_delay(std::span<const double> delay,
                                                                        int n_sections) {
    if (delay.size() < 2) {
        throw ContractViolation("abel_smith_from_delay: need at least two nodes");
    }
    if (n_sections < 0) {
        throw InvalidParameter("abel_smith_from_delay: negative section count");
    }
    const std::size_t nodes = delay.size();
    const double dw = 2.0 * std::numbers::pi / static_cast<double>(nodes - 1);
    std::vector<double> w(nodes), phi(nodes, 0.0);
    for (std::size_t i = 0; i < nodes; ++i) {
        w[i] = -std::numbers::pi + dw * static_cast<double>(i);
        if (delay[i] < 0.0) {
            throw InfeasibleTarget("abel_smith_from_delay: desired group delay is negative at ω = " +
                                   std::to_string(w[i]));
        }
        if (i > 0) {
            phi[i] = phi[i - 1] + 0.5 * dw * (delay[i] + delay[i - 1]);
        }
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::vector<AllpassSection> out;
    out.reserve(static_cast<std::size_t>(n_sections));
    double prev_edge = -std::numbers::pi;
    for (int i = 1; i <= n_sections; ++i) {
        const double edge = detail::invert_cumulative(w, phi, two_pi * i);
        const double theta = detail::invert_cumulative(w, phi, two_pi * (i - 0.5));
        double mean_delay;
        const double width = edge - prev_edge;
        if (width > 1e-12) {
            const double a = std::min(phi.back(), two_pi * i);
            const double b = std::min(phi.back(), two_pi * (i - 1));
            mean_delay = (a - b) / width;
        } else {
            const auto j = static_cast<std::size_t>(
                std::clamp((theta + std::numbers::pi) / dw, 0.0, static_cast<double>(nodes - 1)));
            mean_delay = delay[j];
        }
        const double rho = std::clamp((mean_delay - 1.0) / (mean_delay + 1.0), 0.0, kRhoMax);
        out.emplace_back(rho, theta);
        prev_edge = edge;
    }
    return out;
}

/// Area-method initial poles for a band. Requires the desired delay to be
/// non-negative on the grid.
[[nodiscard]] inline std::vector<AllpassSection> abel_smith_init(const SubbandSpec& spec,
                                                                 const FrequencyGrid& grid) {
    std::vector<double> delay(static_cast<std::size_t>(grid.size()) + 1);
    for (std::size_t i = 0; i < delay.size(); ++i) {
        delay[i] = desired_group_delay(spec, -std::numbers::pi + grid.spacing() * static_cast<double>(i));
    }
    return abel_smith_from_delay(delay, spec.N);
}

// ---------------------------------------------------------------------------
// Cost functions.

/// Cost plus gradient with respect to every ρ_i, θ_i (and φ₀ for the phase cost).
struct CostGradient {
    double cost{0.0};
    std::vector<double> d_rho;
    std::vector<double> d_theta;
    double d_phi0{0.0};
};

/// Band target tabulated on a grid: weight, desired delay, and the phase that the
/// section product must cancel.
class BandTarget {
public:
    BandTarget(const SubbandSpec& spec, const WeightingSpec& weighting, const FrequencyGrid& grid)
        : spec_(spec), grid_(&grid) {
        weighting.validate();
        const auto n = static_cast<std::size_t>(grid.size());
        weight_.resize(n);
        delay_.resize(n);
        residual_phase_.resize(n);
        const auto w = grid.omega();
        for (std::size_t i = 0; i < n; ++i) {
            weight_[i] = weighting(w[i]);
            delay_[i] = desired_group_delay(spec, w[i]);
            const double u = w[i] + spec.k_prime * std::numbers::pi;
            // arg(H·e^{jβ'(ω - k'π)})
            residual_phase_[i] = -spec.alpha_prime * u * u +
                                 spec.beta_prime * (w[i] - spec.k_prime * std::numbers::pi);
        }
    }

    [[nodiscard]] const SubbandSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const FrequencyGrid& grid() const noexcept { return *grid_; }
    [[nodiscard]] std::span<const double> weight() const noexcept { return weight_; }
    [[nodiscard]] std::span<const double> delay() const noexcept { return delay_; }
    [[nodiscard]] std::span<const double> residual_phase() const noexcept { return residual_phase_; }

    /// ∫W·|τ_d - Στ_i|² (periodic trapezoid).
    [[nodiscard]] CostGradient gd_cost(std::span<const double> rho, std::span<const double> theta) const {
        const auto n = weight_.size();
        const auto ns = rho.size();
        const auto cw = grid_->cos_omega();
        const auto sw = grid_->sin_omega();
        std::vector<double> err(delay_.begin(), delay_.end());
        for (std::size_t s = 0; s < ns; ++s) {
            const double r = rho[s], ct = std::cos(theta[s]), st = std::sin(theta[s]);
            const double num = 1.0 - r * r, rr = 1.0 + r * r;
            for (std::size_t i = 0; i < n; ++i) {
                const double c = cw[i] * ct + sw[i] * st;
                err[i] -= num / (rr - 2.0 * r * c);
            }
        }
        const double dw = grid_->spacing();
        CostGradient out{0.0, std::vector<double>(ns, 0.0), std::vector<double>(ns, 0.0), 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            out.cost += weight_[i] * err[i] * err[i];
            err[i] *= -2.0 * weight_[i] * dw; // now ∂cost/∂τ_total at node i
        }
        out.cost *= dw;
        for (std::size_t s = 0; s < ns; ++s) {
            const double r = rho[s], ct = std::cos(theta[s]), st = std::sin(theta[s]);
            const double num = 1.0 - r * r, rr = 1.0 + r * r;
            double gr = 0.0, gt = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double c = cw[i] * ct + sw[i] * st;
                const double sn = sw[i] * ct - cw[i] * st; // sin(ω-θ)
                const double den = rr - 2.0 * r * c;
                const double inv2 = 1.0 / (den * den);
                gr += err[i] * (-2.0 * r * den - num * (2.0 * r - 2.0 * c)) * inv2;
                gt += err[i] * 2.0 * r * num * sn * inv2;
            }
            out.d_rho[s] = gr;
            out.d_theta[s] = gt;
        }
        return out;
    }

    /// Sum of section phases plus the residual target phase, per node (φ₀ excluded).
    [[nodiscard]] std::vector<double> phase_error(std::span<const double> rho,
                                                  std::span<const double> theta) const {
        const auto n = weight_.size();
        const auto w = grid_->omega();
        const auto cw = grid_->cos_omega();
        const auto sw = grid_->sin_omega();
        std::vector<double> err(residual_phase_.begin(), residual_phase_.end());
        for (std::size_t s = 0; s < rho.size(); ++s) {
            const double r = rho[s], ct = std::cos(theta[s]), st = std::sin(theta[s]);
            for (std::size_t i = 0; i < n; ++i) {
                const double c = cw[i] * ct + sw[i] * st;
                const double sn = sw[i] * ct - cw[i] * st;
                err[i] += -w[i] - 2.0 * std::atan2(r * sn, 1.0 - r * c);
            }
        }
        return err;
    }

    /// ∫W·|Υ|² with Υ = Π_i G_i·H·e^{j(φ₀ + β'(ω - k'π))} - 1 = ∫W·2(1 - cos φ_err).
    [[nodiscard]] CostGradient phase_cost(std::span<const double> rho, std::span<const double> theta,
                                          double phi0) const {
        const auto n = weight_.size();
        const auto ns = rho.size();
        const auto cw = grid_->cos_omega();
        const auto sw = grid_->sin_omega();
        auto err = phase_error(rho, theta);
        const double dw = grid_->spacing();
        CostGradient out{0.0, std::vector<double>(ns, 0.0), std::vector<double>(ns, 0.0), 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            const double e = err[i] + phi0;
            out.cost += weight_[i] * 2.0 * (1.0 - std::cos(e));
            err[i] = 2.0 * weight_[i] * dw * std::sin(e); // ∂cost/∂φ_err at node i
            out.d_phi0 += err[i];
        }
        out.cost *= dw;
        for (std::size_t s = 0; s < ns; ++s) {
            const double r = rho[s], ct = std::cos(theta[s]), st = std::sin(theta[s]);
            const double rr = 1.0 + r * r;
            double gr = 0.0, gt = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double c = cw[i] * ct + sw[i] * st;
                const double sn = sw[i] * ct - cw[i] * st;
                const double inv = 1.0 / (rr - 2.0 * r * c);
                gr += err[i] * (-2.0 * sn * inv);
                gt += err[i] * (2.0 * (r * c - r * r) * inv);
            }
            out.d_rho[s] = gr;
            out.d_theta[s] = gt;
        }
        return out;
    }

    /// Closed-form φ₀ minimizing the phase cost for fixed sections.
    [[nodiscard]] double optimal_phi0(std::span<const double> rho, std::span<const double> theta) const {
        const auto err = phase_error(rho, theta);
        cplx acc{};
        for (std::size_t i = 0; i < err.size(); ++i) {
            acc += weight_[i] * std::polar(1.0, err[i]);
        }
        acc *= grid_->spacing();
        if (std::abs(acc) < 1e-12) {
            throw AmbiguousPhase("optimal_phi0: weighted integral vanished; phase is undefined");
        }
        return wrap_angle(-std::arg(acc));
    }

private:
    SubbandSpec spec_;
    const FrequencyGrid* grid_;
    std::vector<double> weight_, delay_, residual_phase_;
};

namespace detail {
inline void split_sections(std::span<const AllpassSection> s, std::vector<double>& rho,
                           std::vector<double>& theta) {
    rho.resize(s.size());
    theta.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        rho[i] = s[i].rho();
        theta[i] = s[i].theta();
    }
}
} // namespace detail

[[nodiscard]] inline CostGradient gd_cost(std::span<const AllpassSection> sections,
                                          const SubbandSpec& spec, const WeightingSpec& weighting,
                                          const FrequencyGrid& grid) {
    std::vector<double> rho, theta;
    detail::split_sections(sections, rho, theta);
    return BandTarget(spec, weighting, grid).gd_cost(rho, theta);
}

[[nodiscard]] inline CostGradient phase_cost(std::span<const AllpassSection> sections, double phi0,
                                             const SubbandSpec& spec, const WeightingSpec& weighting,
                                             const FrequencyGrid& grid) {
    std::vector<double> rho, theta;
    detail::split_sections(sections, rho, theta);
    return BandTarget(spec, weighting, grid).phase_cost(rho, theta, phi0);
}

[[nodiscard]] inline double optimal_phi0(std::span<const AllpassSection> sections,
                                         const SubbandSpec& spec, const WeightingSpec& weighting,
                                         const FrequencyGrid& grid) {
    std::vector<double> rho, theta;
    detail::split_sections(sections, rho, theta);
    return BandTarget(spec, weighting, grid).optimal_phi0(rho, theta);
}

// ---------------------------------------------------------------------------
// Multi-stage band design.

/// Costs recorded at each stage boundary of one band design.
struct BandReport {
    double gd_cost_init{0.0};        // Abel-Smith poles
    double gd_cost_stage2{0.0};      // after group-delay optimisation
    double phase_cost_stage3_entry{0.0}; // stage-2 poles, φ₀ = 0
    double phase_cost_stage3{0.0};   // closed-form φ₀
    double phase_cost_final{0.0};    // after joint optimisation
    double gd_cost_final{0.0};
    OptimizationReport gd_opt;
    OptimizationReport joint_opt;
};

struct BandDesign {
    SubbandSpec spec;
    AllpassCascade cascade; // sections + fitted φ₀ (enters the phase cost as e^{+jφ₀})
    double psi{0.0};        // runtime correction applied after the section product
    BandReport report;
};

namespace detail {
// ρ = ρ_max·σ(u)
inline double rho_from_u(double u) noexcept { return kRhoMax / (1.0 + std::exp(-u)); }
inline double u_from_rho(double rho) noexcept {
    const double s = std::clamp(rho / kRhoMax, 1e-2, 1.0 - 1e-9);
    return std::log(s / (1.0 - s));
}
} // namespace detail

/// Runs the four design stages for one band: area-method poles, group-delay
/// optimisation of (ρ, θ), closed-form φ₀, joint phase-transfer optimisation of
/// (ρ, θ, φ₀). Stability holds at every iterate through ρ = ρ_max·σ(u).
[[nodiscard]] inline BandDesign design_band(const SubbandSpec& spec, const WeightingSpec& weighting,
                                            const FrequencyGrid& grid,
                                            const OptimizerSettings& settings = {}) {
    BandDesign out;
    out.spec = spec;
    out.cascade.band = spec.k;
    const BandTarget target(spec, weighting, grid);
    const auto ns = static_cast<std::size_t>(spec.N);

    auto fail = [&](const char* stage, const std::exception& e) {
        return DesignFailure(spec.k, stage, e.what());
    };

    // Stage 1: area method on the target clipped at zero.
    std::vector<AllpassSection> init;
    {
        std::vector<double> delay(static_cast<std::size_t>(grid.size()) + 1);
        for (std::size_t i = 0; i < delay.size(); ++i) {
            const double w = -std::numbers::pi + grid.spacing() * static_cast<double>(i);
            delay[i] = std::max(0.0, desired_group_delay(spec, w));
        }
        init = abel_smith_from_delay(delay, spec.N);
    }
    std::vector<double> rho, theta;
    detail::split_sections(init, rho, theta);
    out.report.gd_cost_init = target.gd_cost(rho, theta).cost;

    // Stage 2: group delay fit.
    if (ns > 0) {
        std::vector<double> x(2 * ns);
        for (std::size_t i = 0; i < ns; ++i) {
            x[i] = detail::u_from_rho(rho[i]);
            x[ns + i] = theta[i];
        }
        CostFunction f = [&](std::span<const double> v, std::span<double> g) {
            std::vector<double> r(ns);
            for (std::size_t i = 0; i < ns; ++i) {
                r[i] = detail::rho_from_u(v[i]);
            }
            const auto cg = target.gd_cost(r, v.subspan(ns, ns));
            for (std::size_t i = 0; i < ns; ++i) {
                const double s = r[i] / kRhoMax;
                g[i] = cg.d_rho[i] * kRhoMax * s * (1.0 - s);
                g[ns + i] = cg.d_theta[i];
            }
            return cg.cost;
        };
        OptimizationResult res;
        try {
            res = minimize(f, std::move(x), settings);
        } catch (const std::exception& e) {
            throw fail("group_delay", e);
        }
        for (std::size_t i = 0; i < ns; ++i) {
            rho[i] = detail::rho_from_u(res.x[i]);
            theta[i] = res.x[ns + i];
        }
        out.report.gd_opt = res.report;
    }
    out.report.gd_cost_stage2 = target.gd_cost(rho, theta).cost;

    // Stage 3: φ₀ in closed form.
    out.report.phase_cost_stage3_entry = target.phase_cost(rho, theta, 0.0).cost;
    double phi0 = 0.0;
    try {
        phi0 = target.optimal_phi0(rho, theta);
    } catch (const std::exception& e) {
        throw fail("phi0", e);
    }
    out.report.phase_cost_stage3 = target.phase_cost(rho, theta, phi0).cost;

    // Stage 4: joint (ρ, θ, φ₀).
    if (ns > 0) {
        std::vector<double> x(2 * ns + 1);
        for (std::size_t i = 0; i < ns; ++i) {
            x[i] = detail::u_from_rho(rho[i]);
            x[ns + i] = theta[i];
        }
        x[2 * ns] = phi0;
        CostFunction f = [&](std::span<const double> v, std::span<double> g) {
            std::vector<double> r(ns);
            for (std::size_t i = 0; i < ns; ++i) {
                r[i] = detail::rho_from_u(v[i]);
            }
            const auto cg = target.phase_cost(r, v.subspan(ns, ns), v[2 * ns]);
            for (std::size_t i = 0; i < ns; ++i) {
                const double s = r[i] / kRhoMax;
                g[i] = cg.d_rho[i] * kRhoMax * s * (1.0 - s);
                g[ns + i] = cg.d_theta[i];
            }
            g[2 * ns] = cg.d_phi0;
            return cg.cost;
        };
        OptimizationResult res;
        try {
            res = minimize(f, std::move(x), settings);
        } catch (const std::exception& e) {
            throw fail("joint", e);
        }
        for (std::size_t i = 0; i < ns; ++i) {
            rho[i] = detail::rho_from_u(res.x[i]);
            theta[i] = res.x[ns + i];
        }
        phi0 = res.x[2 * ns];
        out.report.joint_opt = res.report;
    }
    out.report.phase_cost_final = target.phase_cost(rho, theta, phi0).cost;
    out.report.gd_cost_final = target.gd_cost(rho, theta).cost;
    if (!std::isfinite(out.report.phase_cost_final) || !std::isfinite(out.report.gd_cost_final)) {
        throw DesignFailure(spec.k, "joint", "non-finite final cost");
    }

    out.cascade.sections.reserve(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        out.cascade.sections.emplace_back(std::min(rho[i], kRhoMax), theta[i]);
    }
    out.cascade.phi0 = wrap_angle(phi0);
    // Band target e^{-jβ′(ω′+k′π)} already holds the k′ term; only φ₀ is removed.
    out.psi = wrap_angle(phi0);
    return out;
}

/// Runtime equalizer for a designed band: the section product followed by e^{jψ}.
/// Expressed as a cascade whose e^{-jφ₀} factor equals e^{jψ}.
[[nodiscard]] inline AllpassCascade runtime_cascade(const BandDesign& b) {
    return AllpassCascade{b.cascade.sections, -b.psi, b.cascade.band};
}

struct EqualizerDesign {
    double alpha{0.0};
    FilterBankConfig fb;
    WeightingSpec weighting;
    int grid_points{2048};
    std::vector<BandDesign> bands;

    [[nodiscard]] int total_sections() const noexcept {
        int n = 0;
        for (const auto& b : bands) {
            n += static_cast<int>(b.cascade.sections.size());
        }
        return n;
    }
};

/// Designs all M bands. Bands are independent; `threads` > 1 spreads them over workers
/// (results do not depend on the thread count).
[[nodiscard]] inline EqualizerDesign design_all_bands(double alpha, const FilterBankConfig& fb,
                                                      const WeightingSpec& weighting,
                                                      const FrequencyGrid& grid,
                                                      const OptimizerSettings& settings = {},
                                                      unsigned threads = 1) {
    fb.validate();
    EqualizerDesign d{alpha, fb, weighting, grid.size(), std::vector<BandDesign>(static_cast<std::size_t>(fb.M))};
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(fb.M));
    auto worker = [&] {
        for (int k = next++; k < fb.M; k = next++) {
            try {
                d.bands[static_cast<std::size_t>(k)] =
                    design_band(subband_spec(alpha, fb.M, k), weighting, grid, settings);
            } catch (...) {
                errors[static_cast<std::size_t>(k)] = std::current_exception();
            }
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(fb.M)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_workers; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return d;
}

} // namespace cdeq

#endif // CDEQ_EQUALIZER_DESIGN_HPP
