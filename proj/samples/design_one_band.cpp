// SPDX-License-Identifier: Apache-2.0
// Designs the equalizer for a single sub-band and prints its stage costs and poles.
//
//   design_one_band [band] [length_km]

#include <cdeq/cd_channel.hpp>
#include <cdeq/equalizer_design.hpp>

#include <cstdio>
#include <cstdlib>
#include <numbers>

int main(int argc, char** argv) {
    using namespace cdeq;
    const int k = argc > 1 ? std::atoi(argv[1]) : 0;
    const double length_km = argc > 2 ? std::atof(argv[2]) : 2000.0;
    constexpr int M = 32;

    const double alpha = compute_alpha(1550e-9, 16.0, length_km * 1e3, 56e9);
    const auto spec = subband_spec(alpha, M, k);
    std::printf("alpha %.4f  band %d (k' = %d)  alpha' %.4f  beta' %d  N %d\n", alpha, spec.k, spec.k_prime,
                spec.alpha_prime, spec.beta_prime, spec.N);

    const FrequencyGrid grid(2048);
    const auto w = WeightingSpec::rc_squared(0.6 * std::numbers::pi, 0.1);
    const auto d = design_band(spec, w, grid);
    const auto& r = d.report;
    std::printf("group delay cost  %.3e -> %.3e (%d iterations)\n", r.gd_cost_init, r.gd_cost_stage2,
                r.gd_opt.iterations);
    std::printf("phase cost        %.3e -> %.3e -> %.3e (%d iterations)\n", r.phase_cost_stage3_entry,
                r.phase_cost_stage3, r.phase_cost_final, r.joint_opt.iterations);
    std::printf("phi0 %.6f  psi %.6f\n", d.cascade.phi0, d.psi);
    for (const auto& s : d.cascade.sections) {
        std::printf("  rho %.9f  theta %+.9f\n", s.rho(), s.theta());
    }
    return 0;
}
