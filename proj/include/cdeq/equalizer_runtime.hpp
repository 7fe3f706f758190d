// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_EQUALIZER_RUNTIME_HPP
#define CDEQ_EQUALIZER_RUNTIME_HPP

#include <cdeq/allpass.hpp>
#include <cdeq/equalizer_design.hpp>
#include <cdeq/filterbank.hpp>

#include <span>
#include <vector>

namespace cdeq {

/// Full-band all-pass equalizer: one long cascade at the input rate.
class FullbandEqualizer {
public:
    explicit FullbandEqualizer(const BandDesign& design)
        : coeffs_(runtime_cascade(design)), state_(coeffs_.size()), delay_(design.spec.beta_prime) {}

    /// Nominal delay in input samples (β).
    [[nodiscard]] int delay() const noexcept { return delay_; }

    [[nodiscard]] std::vector<cplx> process(std::span<const cplx> x) {
        std::vector<cplx> out(x.size());
        filter_stream(coeffs_, x, out, state_);
        return out;
    }

private:
    AllpassCoefficients coeffs_;
    AllpassState state_;
    int delay_;
};

/// Analysis bank, one all-pass cascade per band (with its ψ_k derotation), synthesis bank.
class FilterBankEqualizer {
public:
    FilterBankEqualizer(const EqualizerDesign& design, const PrototypeFilter& proto)
        : cfg_(design.fb), afb_(design.fb, proto), sfb_(design.fb, proto) {
        const auto M = static_cast<std::size_t>(cfg_.M);
        if (design.bands.size() != M) {
            throw ContractViolation("FilterBankEqualizer: design has " +
                                    std::to_string(design.bands.size()) + " bands, bank has " +
                                    std::to_string(M));
        }
        int beta = 0;
        for (const auto& b : design.bands) {
            coeffs_.emplace_back(runtime_cascade(b));
            states_.emplace_back(coeffs_.back().size());
            beta = b.spec.beta_prime;
        }
        delay_ = cascade_delay(cfg_, proto) + beta * cfg_.decimation();
    }

    [[nodiscard]] int delay() const noexcept { return delay_; }
    [[nodiscard]] int block() const noexcept { return cfg_.decimation(); }

    /// Length must be a multiple of M/2.
    [[nodiscard]] std::vector<cplx> process(std::span<const cplx> x) {
        const auto D = static_cast<std::size_t>(cfg_.decimation());
        const auto M = static_cast<std::size_t>(cfg_.M);
        if (x.size() % D != 0) {
            throw ContractViolation("FilterBankEqualizer::process: length not a multiple of M/2");
        }
        std::vector<cplx> out(x.size());
        std::vector<cplx> bands(M);
        for (std::size_t off = 0; off < x.size(); off += D) {
            afb_.process_frame(x.subspan(off, D), bands);
            for (std::size_t k = 0; k < M; ++k) {
                filter_stream(coeffs_[k], std::span<const cplx>(&bands[k], 1),
                              std::span<cplx>(&bands[k], 1), states_[k]);
            }
            sfb_.process_frame(bands, std::span<cplx>(out).subspan(off, D));
        }
        return out;
    }

private:
    FilterBankConfig cfg_;
    AnalysisBank afb_;
    SynthesisBank sfb_;
    std::vector<AllpassCoefficients> coeffs_;
    std::vector<AllpassState> states_;
    int delay_{0};
};

} // namespace cdeq

#endif // CDEQ_EQUALIZER_RUNTIME_HPP
