// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <cdeq/cd_channel.hpp>
#include <cdeq/equalizer_design.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace cdeq;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kPi = std::numbers::pi;

double paper_alpha() {
    return compute_alpha(test::kLambda0, test::kDispersion, test::kLength, test::kSampleRate);
}

// Sections are independent of the spec; only N is taken from it.
std::vector<AllpassSection> random_sections(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> r(0.05, 0.9), t(-kPi, kPi);
    std::vector<AllpassSection> s;
    for (int i = 0; i < n; ++i) {
        const double rho = r(rng);
        s.emplace_back(rho, t(rng));
    }
    return s;
}

std::vector<AllpassSection> unpack(std::span<const double> x, std::size_t n) {
    std::vector<AllpassSection> s;
    for (std::size_t i = 0; i < n; ++i) {
        s.emplace_back(x[i], x[n + i]);
    }
    return s;
}

// Area-method poles for band k, jittered, plus a jittered closed-form φ₀ as the last entry.
// These are the points the optimiser actually visits.
std::vector<double> jittered_start(const SubbandSpec& spec, const WeightingSpec& w,
                                   const FrequencyGrid& grid, std::uint64_t seed) {
    const auto init = abel_smith_init(spec, grid);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x;
    for (const auto& s : init) {
        x.push_back(std::clamp(s.rho() + 0.05 * u(rng), 0.0, 0.95));
    }
    for (const auto& s : init) {
        x.push_back(s.theta() + 0.02 * u(rng));
    }
    const auto sections = unpack(x, init.size());
    x.push_back(optimal_phi0(sections, spec, w, grid) + 0.3 * u(rng));
    return x;
}

// Direct evaluation of Δ·Σ W·|Π G_i·H·e^{j(φ₀ + β'(ω - k'π))} - 1|².
double phase_cost_oracle(std::span<const AllpassSection> s, double phi0, const SubbandSpec& spec,
                         const WeightingSpec& w, const FrequencyGrid& grid) {
    double acc = 0.0;
    for (double om : grid.omega()) {
        cplx g{1.0, 0.0};
        for (const auto& sec : s) {
            g *= section_response(sec, om);
        }
        const cplx h = subband_cd_response(spec.alpha_prime, spec.k_prime, om);
        const cplx y = g * h * std::polar(1.0, phi0 + spec.beta_prime * (om - spec.k_prime * kPi)) - 1.0;
        acc += w(om) * std::norm(y);
    }
    return acc * grid.spacing();
}
} // namespace

TEST_CASE("subband_spec for the reference link", "[equalizer_design]") {
    const double alpha = paper_alpha();
    const std::vector<int> expected{26, 25, 23, 22, 20, 19, 17, 16, 14, 12, 11, 9,  8,  6,  5,  3,
                                    1,  50, 48, 47, 45, 44, 42, 41, 39, 37, 36, 34, 33, 31, 30, 28};
    for (int k = 0; k < 32; ++k) {
        const auto s = subband_spec(alpha, 32, k);
        CHECK(s.k == k);
        CHECK(s.k_prime == (k <= 16 ? k : k - 32));
        CHECK_THAT(s.alpha_prime, WithinAbs(0.2499878471010188, 1e-13));
        CHECK(s.beta_prime == 26);
        CHECK(s.N == expected[static_cast<std::size_t>(k)]);
    }
}

TEST_CASE("subband_spec field invariants", "[equalizer_design][property]") {
    for (double alpha : {0.0, 1.3, 17.0, 63.99688885786081, 255.98755543144324}) {
        for (int M : {2, 4, 8, 16, 32, 64}) {
            for (int k = 0; k < M; ++k) {
                const auto s = subband_spec(alpha, M, k);
                CHECK(s.beta_prime == static_cast<int>(std::ceil(2.0 * s.alpha_prime * (M / 2) * kPi)));
                CHECK(s.N == std::max(0, static_cast<int>(std::ceil(-2.0 * kPi * s.alpha_prime * s.k_prime +
                                                                     s.beta_prime))));
                CHECK(s.N >= 0);
            }
        }
    }
}

TEST_CASE("subband_spec rejects invalid inputs", "[equalizer_design]") {
    CHECK_THROWS_AS(subband_spec(64.0, 32, 32), InvalidParameter);
    CHECK_THROWS_AS(subband_spec(64.0, 32, -1), InvalidParameter);
    CHECK_THROWS_AS(subband_spec(64.0, 31, 0), InvalidParameter);
    CHECK_THROWS_AS(subband_spec(-1.0, 32, 0), InvalidParameter);
    CHECK_THROWS_AS(fullband_spec(-1.0), InvalidParameter);
}

TEST_CASE("full-band order", "[equalizer_design]") {
    CHECK(fullband_spec(paper_alpha()).N == 403);
    CHECK(fullband_spec(paper_alpha()).beta_prime == 403);
    CHECK(fullband_spec(0.0).N == 0);
    const double a2 = compute_alpha(test::kLambda0, test::kDispersion, 2.0 * test::kLength, test::kSampleRate);
    CHECK_THAT(a2, WithinRel(2.0 * paper_alpha(), 1e-14));
}

TEST_CASE("two-band framing reproduces the full-band spec", "[equalizer_design]") {
    for (double alpha : {0.0, 5.5, paper_alpha()}) {
        const auto s = subband_spec(alpha, 2, 0);
        const auto f = fullband_spec(alpha);
        CHECK(s.k_prime == 0);
        CHECK(s.alpha_prime == f.alpha_prime);
        CHECK(s.beta_prime == f.beta_prime);
        CHECK(s.N == f.N);
    }
}

TEST_CASE("total section count is about twice the full-band order", "[equalizer_design]") {
    const double alpha = paper_alpha();
    int total = 0;
    for (int k = 0; k < 32; ++k) {
        total += subband_spec(alpha, 32, k).N;
    }
    const int n_iir = fullband_spec(alpha).N;
    CHECK(total >= 2 * n_iir - 32);
    CHECK(total <= 2 * n_iir + 32);
}

TEST_CASE("desired phase and group delay are consistent", "[equalizer_design][property]") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    const double alpha = paper_alpha();
    for (int k : {0, 5, 16, 17, 31}) {
        const auto s = subband_spec(alpha, 32, k);
        for (int i = 0; i < 10; ++i) {
            const double w = u(rng);
            const double h = 1e-3; // exact for a quadratic up to rounding
            const double fd = -(desired_phase(s, w + h, 0.3) - desired_phase(s, w - h, 0.3)) / (2.0 * h);
            CHECK_THAT(fd, WithinAbs(desired_group_delay(s, w), 1e-8));
            CHECK_THAT(desired_phase(s, w, 1.25) - desired_phase(s, w, 0.0), WithinAbs(1.25, 1e-12));
        }
    }
    const auto s0 = subband_spec(alpha, 32, 0);
    CHECK(desired_group_delay(s0, 0.0) == 26.0);
    const SubbandSpec flat{0, 0, 0.0, 0, 0};
    CHECK(desired_phase(flat, 1.0, 0.0) == 0.0);
    const SubbandSpec delay{0, 0, 0.0, 7, 7};
    CHECK(desired_group_delay(delay, -2.0) == 7.0);
    CHECK(desired_group_delay(delay, 2.5) == 7.0);
}

TEST_CASE("desired group delay sign per band", "[equalizer_design]") {
    // The band at k' = M/2 reaches past ω' = π - 2π·β'/(2α'(M/2+1)) into negative delay;
    // every other band stays non-negative on the closed interval.
    const double alpha = paper_alpha();
    const FrequencyGrid grid(2048);
    for (int k = 0; k < 32; ++k) {
        const auto s = subband_spec(alpha, 32, k);
        double lo = desired_group_delay(s, kPi);
        for (double w : grid.omega()) {
            lo = std::min(lo, desired_group_delay(s, w));
        }
        if (k == 16) {
            CHECK_THAT(lo, WithinAbs(26.0 - 2.0 * 0.2499878471010188 * 17.0 * kPi, 1e-9));
            CHECK(lo < 0.0);
            CHECK(desired_group_delay(s, 0.0) > 0.0);
        } else {
            CHECK(lo >= 0.0);
        }
    }
}

TEST_CASE("area-method initialisation on a constant target", "[equalizer_design]") {
    const std::vector<double> delay(2049, 3.0);
    const auto s = abel_smith_from_delay(delay, 3);
    REQUIRE(s.size() == 3);
    const double expected[] = {-2.0 * kPi / 3.0, 0.0, 2.0 * kPi / 3.0};
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK_THAT(s[i].rho(), WithinAbs(0.5, 1e-9));
        CHECK_THAT(s[i].theta(), WithinAbs(expected[i], 1e-9));
    }
    const std::vector<double> unit(2049, 1.0);
    const auto one = abel_smith_from_delay(unit, 1);
    REQUIRE(one.size() == 1);
    CHECK_THAT(one[0].rho(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("area-method initialisation on dispersive bands", "[equalizer_design]") {
    const double alpha = paper_alpha();
    const FrequencyGrid grid(2048);
    for (int k : {0, 7, 15, 17, 31}) {
        const auto spec = subband_spec(alpha, 32, k);
        const auto s = abel_smith_init(spec, grid);
        REQUIRE(static_cast<int>(s.size()) == spec.N);
        // Trapezoid over the closed interval [-π, π].
        double area = 0.5 * (desired_group_delay(spec, kPi) - desired_group_delay(spec, -kPi));
        for (double w : grid.omega()) {
            area += desired_group_delay(spec, w);
        }
        area *= grid.spacing();
        CHECK_THAT(area, WithinRel(2.0 * kPi * (spec.beta_prime - 2.0 * kPi * spec.alpha_prime * spec.k_prime), 1e-12));
        CHECK(area <= 2.0 * kPi * spec.N + 1e-9);
        CHECK(area > 2.0 * kPi * (spec.N - 1));
        // Every section contributes 2π of delay area.
        AllpassCascade c{s, 0.0, k};
        double got = 0.0;
        for (double w : grid.omega()) {
            got += cascade_group_delay(c, w);
        }
        CHECK_THAT(got * grid.spacing(), WithinRel(2.0 * kPi * spec.N, 1e-6));
        // Angles ascend over (-π, π]; a slice cut short by the ceiling clamps to π.
        auto upper = [](double t) { return t <= -kPi + 1e-12 ? kPi : t; };
        for (std::size_t i = 1; i < s.size(); ++i) {
            CHECK(upper(s[i].theta()) > upper(s[i - 1].theta()));
        }
    }
    CHECK_THROWS_AS(abel_smith_init(subband_spec(alpha, 32, 16), grid), InfeasibleTarget);
}

TEST_CASE("group delay cost", "[equalizer_design]") {
    const FrequencyGrid grid(2048);
    SECTION("exact match has zero cost") {
        const SubbandSpec spec{0, 0, 0.0, 3, 3};
        const std::vector<AllpassSection> s(3, AllpassSection(0.0, 0.0));
        CHECK(gd_cost(s, spec, WeightingSpec::uniform(), grid).cost < 1e-24);
    }
    SECTION("analytic gradient matches central differences") {
        const auto w = WeightingSpec::rc_squared(0.6 * kPi, 0.1);
        for (int k : {0, 3, 12, 17, 30}) {
            const auto spec = subband_spec(paper_alpha(), 32, k);
            const auto n = static_cast<std::size_t>(spec.N);
            for (std::uint64_t seed = 0; seed < 4; ++seed) {
                auto x = jittered_start(spec, w, grid, seed);
                x.pop_back();
                CostFunction f = [&](std::span<const double> v, std::span<double> g) {
                    const auto cg = gd_cost(unpack(v, n), spec, w, grid);
                    std::copy(cg.d_rho.begin(), cg.d_rho.end(), g.begin());
                    std::copy(cg.d_theta.begin(), cg.d_theta.end(), g.begin() + static_cast<std::ptrdiff_t>(n));
                    return cg.cost;
                };
                CHECK(check_gradient(f, x, 1e-6) <= 1e-6);
            }
        }
    }
    SECTION("weighting never increases the cost") {
        const SubbandSpec spec{0, 0, 0.0, 4, 4};
        // Unit-delay sections with poles at ±0.8π put the error at high |ω'|.
        std::vector<AllpassSection> s{AllpassSection(0.0, 0.0), AllpassSection(0.0, 0.0),
                                      AllpassSection(0.6, 0.8 * kPi), AllpassSection(0.6, -0.8 * kPi)};
        const double uni = gd_cost(s, spec, WeightingSpec::uniform(), grid).cost;
        const double rc = gd_cost(s, spec, WeightingSpec::rc_squared(0.6 * kPi, 0.1), grid).cost;
        CHECK(rc <= uni);
        CHECK(rc < 0.5 * uni);
    }
}

TEST_CASE("weighting shape", "[equalizer_design]") {
    const auto w = WeightingSpec::rc_squared(0.6 * kPi, 0.1);
    CHECK(w(0.0) == 1.0);
    CHECK(w(0.54 * kPi) == 1.0);
    CHECK(w(-0.54 * kPi) == 1.0);
    CHECK_THAT(w(0.6 * kPi), WithinAbs(0.5, 1e-12));
    CHECK(w(0.66 * kPi) == 0.0);
    CHECK(w(kPi) == 0.0);
    for (double om = -kPi; om < kPi; om += 0.01) {
        CHECK(w(om) >= 0.0);
        CHECK(w(om) <= 1.0);
        CHECK(w(om) == w(-om));
    }
    CHECK(WeightingSpec::uniform()(2.0) == 1.0);
    CHECK_THROWS_AS(WeightingSpec::rc_squared(0.0, 0.1), InvalidParameter);
    CHECK_THROWS_AS(WeightingSpec::rc_squared(1.0, 1.5), InvalidParameter);
    CHECK_THROWS_AS(FrequencyGrid(100), InvalidParameter);
    const FrequencyGrid g(1000);
    CHECK(g.omega().front() == -kPi);
    CHECK_THAT(g.omega().back(), WithinAbs(kPi - g.spacing(), 1e-12));
}

TEST_CASE("closed-form phase offset", "[equalizer_design]") {
    const FrequencyGrid grid(2048);
    const auto w = WeightingSpec::rc_squared(0.6 * kPi, 0.1);
    SECTION("agrees with a brute-force search") {
        for (int k : {0, 9, 20}) {
            const auto spec = subband_spec(paper_alpha(), 32, k);
            const auto s = random_sections(spec.N, 7 + static_cast<std::uint64_t>(k));
            const double phi = optimal_phi0(s, spec, w, grid);
            const int n = 10000;
            double best = 0.0, best_cost = INFINITY;
            for (int i = 0; i < n; ++i) {
                const double p = -kPi + 2.0 * kPi * i / n;
                const double c = phase_cost(s, p, spec, w, grid).cost;
                if (c < best_cost) {
                    best_cost = c;
                    best = p;
                }
            }
            CHECK(std::abs(wrap_angle(phi - best)) <= 2.0 * kPi / n);
            CHECK(phase_cost(s, phi, spec, w, grid).cost <= best_cost + 1e-12);
            CHECK(std::abs(phase_cost(s, phi, spec, w, grid).d_phi0) < 1e-9);
        }
    }
    SECTION("constant phase error is removed exactly") {
        // Two unit delays against β' = 2 at k' = 1 leave a constant error of -2π.
        const SubbandSpec spec{1, 1, 0.0, 2, 2};
        const std::vector<AllpassSection> s(2, AllpassSection(0.0, 0.0));
        const double phi = optimal_phi0(s, spec, w, grid);
        CHECK_THAT(phi, WithinAbs(0.0, 1e-12));
        CHECK(phase_cost(s, phi, spec, w, grid).cost < 1e-20);
        double area = 0.0;
        for (double om : grid.omega()) {
            area += w(om);
        }
        area *= grid.spacing();
        CHECK_THAT(phase_cost(s, phi + 0.7, spec, w, grid).cost,
                   WithinRel(2.0 * (1.0 - std::cos(0.7)) * area, 1e-9));
    }
    SECTION("vanishing weighted integral is ambiguous") {
        // One unit delay against a flat target: the error e^{-jω} integrates to zero.
        const SubbandSpec spec{0, 0, 0.0, 0, 1};
        const std::vector<AllpassSection> s{AllpassSection(0.0, 0.0)};
        CHECK_THROWS_AS(optimal_phi0(s, spec, WeightingSpec::uniform(), grid), AmbiguousPhase);
    }
}

TEST_CASE("phase transfer cost", "[equalizer_design]") {
    const FrequencyGrid grid(2048);
    const auto w = WeightingSpec::rc_squared(0.6 * kPi, 0.1);
    SECTION("matches direct evaluation") {
        for (int k : {0, 16, 25}) {
            const auto spec = subband_spec(paper_alpha(), 32, k);
            const auto s = random_sections(spec.N, 11 + static_cast<std::uint64_t>(k));
            for (double phi : {0.0, 1.1, -2.9}) {
                CHECK_THAT(phase_cost(s, phi, spec, w, grid).cost,
                           WithinAbs(phase_cost_oracle(s, phi, spec, w, grid), 1e-10));
                CHECK_THAT(phase_cost(s, phi, spec, WeightingSpec::uniform(), grid).cost,
                           WithinAbs(phase_cost_oracle(s, phi, spec, WeightingSpec::uniform(), grid), 1e-10));
            }
        }
    }
    SECTION("perfect equalizer has zero cost") {
        const SubbandSpec spec{0, 0, 0.0, 5, 5};
        const std::vector<AllpassSection> s(5, AllpassSection(0.0, 1.0));
        CHECK(phase_cost(s, 0.0, spec, w, grid).cost < 1e-20);
        CHECK(phase_cost(s, 0.0, spec, WeightingSpec::uniform(), grid).cost < 1e-20);
    }
    SECTION("analytic gradient matches central differences") {
        for (int k : {0, 3, 12, 17, 30}) {
            const auto spec = subband_spec(paper_alpha(), 32, k);
            const auto n = static_cast<std::size_t>(spec.N);
            for (std::uint64_t seed = 0; seed < 4; ++seed) {
                const auto x = jittered_start(spec, w, grid, seed);
                CostFunction f = [&](std::span<const double> v, std::span<double> g) {
                    const auto cg = phase_cost(unpack(v, n), v[2 * n], spec, w, grid);
                    std::copy(cg.d_rho.begin(), cg.d_rho.end(), g.begin());
                    std::copy(cg.d_theta.begin(), cg.d_theta.end(), g.begin() + static_cast<std::ptrdiff_t>(n));
                    g[2 * n] = cg.d_phi0;
                    return cg.cost;
                };
                CHECK(check_gradient(f, x, 1e-6) <= 1e-6);
            }
        }
    }
}

TEST_CASE("design_band without dispersion", "[equalizer_design]") {
    const FrequencyGrid grid(2048);
    const auto spec = subband_spec(0.0, 32, 4);
    CHECK(spec.beta_prime == 0);
    CHECK(spec.N == 0);
    const auto d = design_band(spec, WeightingSpec::rc_squared(0.6 * kPi, 0.1), grid);
    CHECK(d.cascade.sections.empty());
    CHECK(d.cascade.phi0 == 0.0);
    CHECK(d.psi == 0.0);
    CHECK(d.report.phase_cost_final < 1e-20);
}

TEST_CASE("design_band on reference bands", "[equalizer_design][slow]") {
    const FrequencyGrid grid(2048);
    const FrequencyGrid fine(4096);
    const auto w = WeightingSpec::rc_squared(0.6 * kPi, 0.1);
    for (int k : {0, 16, 17}) {
        CAPTURE(k);
        const auto spec = subband_spec(paper_alpha(), 32, k);
        const auto d = design_band(spec, w, grid);
        const auto& r = d.report;
        REQUIRE(static_cast<int>(d.cascade.sections.size()) == spec.N);
        CHECK(d.cascade.band == k);
        for (const auto& s : d.cascade.sections) {
            CHECK(s.rho() >= 0.0);
            CHECK(s.rho() <= kRhoMax);
        }
        CHECK(r.gd_cost_stage2 <= r.gd_cost_init);
        CHECK(r.phase_cost_stage3 <= r.phase_cost_stage3_entry);
        CHECK(r.phase_cost_final <= r.phase_cost_stage3);
        CHECK(std::isfinite(r.gd_cost_final));
        CHECK(r.gd_opt.final_cost <= r.gd_opt.initial_cost);
        CHECK(r.joint_opt.final_cost <= r.joint_opt.initial_cost);
        // β' = 26 is even, so the band correction is just φ₀.
        CHECK(d.psi == d.cascade.phi0);
        CHECK(runtime_cascade(d).phi0 == -d.psi);
        // Reported costs agree with the public cost functions.
        CHECK_THAT(phase_cost(d.cascade.sections, d.cascade.phi0, spec, w, grid).cost,
                   WithinRel(r.phase_cost_final, 1e-9));
        // Quadrature convergence: the same design on twice the grid density.
        const double p2 = phase_cost(d.cascade.sections, d.cascade.phi0, spec, w, fine).cost;
        const double g2 = gd_cost(d.cascade.sections, spec, w, fine).cost;
        CHECK(std::abs(p2 - r.phase_cost_final) <= 0.01 * r.phase_cost_final);
        CHECK(std::abs(g2 - r.gd_cost_final) <= 0.01 * r.gd_cost_final);
        if (k == 0) {
            CHECK(r.gd_cost_final < r.gd_cost_init);
        }
    }
}

TEST_CASE("design failures carry the stage name", "[equalizer_design]") {
    // An odd grid has no node inside a very narrow pass band, so every weight is zero
    // and the phase offset has no defined value.
    const FrequencyGrid grid(1001);
    const auto w = WeightingSpec::rc_squared(1e-6, 0.5);
    const auto spec = subband_spec(paper_alpha(), 32, 3);
    try {
        (void)design_band(spec, w, grid);
        FAIL("expected DesignFailure");
    } catch (const DesignFailure& e) {
        CHECK(e.band() == 3);
        CHECK(e.stage() == "phi0");
    }
}

TEST_CASE("design_all_bands is independent of the thread count", "[equalizer_design]") {
    const FrequencyGrid grid(512);
    const FilterBankConfig fb{8, 4};
    const double alpha = 4.0;
    const auto w = WeightingSpec::rc_squared(0.6 * kPi, 0.1);
    const auto a = design_all_bands(alpha, fb, w, grid, {}, 1);
    const auto b = design_all_bands(alpha, fb, w, grid, {}, 3);
    REQUIRE(a.bands.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(a.bands[k].spec == subband_spec(alpha, 8, static_cast<int>(k)));
        CHECK(a.bands[k].cascade.sections == b.bands[k].cascade.sections);
        CHECK(a.bands[k].psi == b.bands[k].psi);
    }
    int total = 0;
    for (int k = 0; k < 8; ++k) {
        total += subband_spec(alpha, 8, k).N;
    }
    CHECK(a.total_sections() == total);
}
