// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_FILTERBANK_HPP
#define CDEQ_FILTERBANK_HPP

// Nonmaximally decimated DFT filter bank: M bands, decimation M/2 (2x oversampled),
// root-raised-cosine prototype of length K·M.
//
// Conventions (time index n, frame index m, hop D = M/2, band centre ω_k = 2πk/M):
//   * frame m is produced once x[n_m] arrives, n_m = m·D + D - 1;
//   * analysis:  y_k[m] = Σ_n x[n]·e^{-jω_k n}·g[n_m - n]
//                (demodulate, low-pass, decimate; band k comes out at baseband);
//     computed as polyphase lanes v_p = Σ_r g[p+rM]·x[n_m-p-rM], a length-M DFT with
//     exponent +j2πkp/M across lanes, then the frame rotation e^{-jω_k n_m}, which is
//     (-1)^{k·m} times a per-band constant;
//   * synthesis: x̂[n_m + l] += g[l]·Σ_k ŷ_k[m]·e^{jω_k(n_m + l + 1)}, l = 0..KM-1
//     (same +j exponent transform, then polyphase weighting and overlap-add).
// The extra "+1" in the synthesis rotation lines up the modulation comb with the centre
// of g*g at KM-1, so the cascade is a near-pure delay of KM - M/2 output samples.

#include <cdeq/error.hpp>
#include <cdeq/fft.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace cdeq {

struct FilterBankConfig {
    int M{32};
    int K{8};
    static constexpr int kappa = 2;

    [[nodiscard]] int decimation() const noexcept { return M / 2; }
    [[nodiscard]] int prototype_length() const noexcept { return K * M; }

    void validate() const {
        if (M < 2 || M % 2 != 0) {
            throw InvalidParameter("FilterBankConfig: M must be a positive even integer");
        }
        if (K < 1) {
            throw InvalidParameter("FilterBankConfig: K must be >= 1");
        }
    }
};

struct PrototypeFilter {
    std::vector<double> coeffs;
    double roll_off{};
    int M{};
    int K{};
};

/// Continuous-time RRC pulse, t in symbol periods, unit-energy-free (peak 1-r+4r/π).
[[nodiscard]] inline double rrc_pulse(double t, double r) noexcept {
    constexpr double pi = std::numbers::pi;
    if (std::abs(t) < 1e-12) {
        return 1.0 - r + 4.0 * r / pi;
    }
    if (std::abs(std::abs(4.0 * r * t) - 1.0) < 1e-9) {
        return r / std::numbers::sqrt2 *
               ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * r)) +
                (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * r)));
    }
    const double x = 4.0 * r * t;
    return (std::sin(pi * t * (1.0 - r)) + 4.0 * r * t * std::cos(pi * t * (1.0 + r))) /
           (pi * t * (1.0 - x * x));
}

/// RRC prototype with symbol period M samples (cut-off π/M), centred at (KM-1)/2,
/// plainly truncated to KM taps. Scaled so 2·Σg² = 1, which makes the
/// analysis→synthesis cascade have unit gain for white input.
[[nodiscard]] inline PrototypeFilter design_rrc(int M, int K, double roll_off) {
    FilterBankConfig{M, K}.validate();
    if (!(roll_off > 0.0 && roll_off <= 1.0)) {
        throw InvalidParameter("design_rrc: roll_off must lie in (0, 1]");
    }
    const int len = K * M;
    const double centre = 0.5 * (len - 1);
    PrototypeFilter p{std::vector<double>(static_cast<std::size_t>(len)), roll_off, M, K};
    for (int i = 0; i < len; ++i) {
        p.coeffs[static_cast<std::size_t>(i)] = rrc_pulse((i - centre) / M, roll_off);
    }
    // Symmetrize exactly; the two halves are evaluated at ±t and may differ in the last ulp.
    for (int i = 0; i < len / 2; ++i) {
        auto& a = p.coeffs[static_cast<std::size_t>(i)];
        auto& b = p.coeffs[static_cast<std::size_t>(len - 1 - i)];
        a = b = 0.5 * (a + b);
    }
    const double energy = std::inner_product(p.coeffs.begin(), p.coeffs.end(), p.coeffs.begin(), 0.0);
    const double scale = 1.0 / std::sqrt(2.0 * energy);
    for (auto& c : p.coeffs) {
        c *= scale;
    }
    return p;
}

/// Component k is g[k + mM], m = 0..K-1.
[[nodiscard]] inline std::vector<std::vector<double>> polyphase_decompose(const PrototypeFilter& p) {
    std::vector<std::vector<double>> comps(static_cast<std::size_t>(p.M));
    for (int k = 0; k < p.M; ++k) {
        auto& c = comps[static_cast<std::size_t>(k)];
        c.reserve(static_cast<std::size_t>(p.K));
        for (int m = 0; m < p.K; ++m) {
            c.push_back(p.coeffs[static_cast<std::size_t>(k + m * p.M)]);
        }
    }
    return comps;
}

struct SubbandFrame {
    std::int64_t index{0};
    std::vector<cplx> values; // one sample per band
};

namespace detail {
inline void check_prototype(const FilterBankConfig& cfg, const PrototypeFilter& p) {
    cfg.validate();
    if (p.M != cfg.M || p.K != cfg.K ||
        p.coeffs.size() != static_cast<std::size_t>(cfg.prototype_length())) {
        throw ContractViolation("filter bank: prototype does not match configuration");
    }
}

// e^{sign·jω_k·offset} for offset = n mod M, band k.
inline std::vector<cplx> rotation_table(int M, int offset, double sign) {
    std::vector<cplx> t(static_cast<std::size_t>(M));
    for (int k = 0; k < M; ++k) {
        const int e = (k * offset) % M;
        t[static_cast<std::size_t>(k)] = std::polar(1.0, sign * 2.0 * std::numbers::pi * e / M);
    }
    return t;
}
} // namespace detail

/// Streaming analysis bank. Single owner; frames come out strictly in order.
class AnalysisBank {
public:
    AnalysisBank(FilterBankConfig cfg, PrototypeFilter proto)
        : cfg_(cfg), proto_(std::move(proto)),
          window_(static_cast<std::size_t>(cfg.prototype_length())),
          fft_(static_cast<std::size_t>(cfg.M), FftDirection::Backward) {
        detail::check_prototype(cfg_, proto_);
        const int D = cfg_.decimation();
        for (int parity = 0; parity < 2; ++parity) {
            rot_[parity] = detail::rotation_table(cfg_.M, (parity * D + D - 1) % cfg_.M, -1.0);
        }
    }

    [[nodiscard]] const FilterBankConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] std::int64_t frames_emitted() const noexcept { return frame_; }

    void reset() {
        std::fill(window_.begin(), window_.end(), cplx{});
        frame_ = 0;
    }

    /// Consumes exactly M/2 new samples, writes M band values.
    void process_frame(std::span<const cplx> chunk, std::span<cplx> bands) {
        const auto D = static_cast<std::size_t>(cfg_.decimation());
        const auto M = static_cast<std::size_t>(cfg_.M);
        if (chunk.size() != D || bands.size() != M) {
            throw ContractViolation("AnalysisBank::process_frame: expected M/2 samples in, M out");
        }
        // window_[l] = x[n_m - l]
        std::move_backward(window_.begin(), window_.end() - static_cast<std::ptrdiff_t>(D), window_.end());
        for (std::size_t i = 0; i < D; ++i) {
            window_[i] = chunk[D - 1 - i];
        }
        auto lanes = fft_.buffer();
        const auto& g = proto_.coeffs;
        for (std::size_t p = 0; p < M; ++p) {
            cplx acc{};
            for (std::size_t idx = p; idx < g.size(); idx += M) {
                acc += g[idx] * window_[idx];
            }
            lanes[p] = acc;
        }
        fft_.execute();
        const auto& rot = rot_[frame_ & 1];
        for (std::size_t k = 0; k < M; ++k) {
            bands[k] = lanes[k] * rot[k];
        }
        ++frame_;
    }

    /// Input length must be a multiple of M/2 (zero-pad the tail; feed KM extra zeros to drain).
    [[nodiscard]] std::vector<SubbandFrame> process(std::span<const cplx> x) {
        const auto D = static_cast<std::size_t>(cfg_.decimation());
        if (x.size() % D != 0) {
            throw ContractViolation("AnalysisBank::process: input length " + std::to_string(x.size()) +
                                    " is not a multiple of M/2 = " + std::to_string(D));
        }
        std::vector<SubbandFrame> frames;
        frames.reserve(x.size() / D);
        for (std::size_t off = 0; off < x.size(); off += D) {
            SubbandFrame f{frame_, std::vector<cplx>(static_cast<std::size_t>(cfg_.M))};
            process_frame(x.subspan(off, D), f.values);
            frames.push_back(std::move(f));
        }
        return frames;
    }

private:
    FilterBankConfig cfg_;
    PrototypeFilter proto_;
    std::vector<cplx> window_;
    FftPlan fft_;
    std::vector<cplx> rot_[2];
    std::int64_t frame_{0};
};

/// Streaming synthesis bank; emits M/2 output samples per frame.
class SynthesisBank {
public:
    SynthesisBank(FilterBankConfig cfg, PrototypeFilter proto)
        : cfg_(cfg), proto_(std::move(proto)),
          acc_(static_cast<std::size_t>(cfg.prototype_length())),
          fft_(static_cast<std::size_t>(cfg.M), FftDirection::Backward) {
        detail::check_prototype(cfg_, proto_);
        const int D = cfg_.decimation();
        for (int parity = 0; parity < 2; ++parity) {
            rot_[parity] = detail::rotation_table(cfg_.M, (parity * D + D) % cfg_.M, +1.0);
        }
    }

    [[nodiscard]] const FilterBankConfig& config() const noexcept { return cfg_; }

    void reset() {
        std::fill(acc_.begin(), acc_.end(), cplx{});
        frame_ = 0;
    }

    void process_frame(std::span<const cplx> bands, std::span<cplx> out) {
        const auto D = static_cast<std::size_t>(cfg_.decimation());
        const auto M = static_cast<std::size_t>(cfg_.M);
        if (bands.size() != M || out.size() != D) {
            throw ContractViolation("SynthesisBank::process_frame: expected M values in, M/2 out");
        }
        auto z = fft_.buffer();
        const auto& rot = rot_[frame_ & 1];
        for (std::size_t k = 0; k < M; ++k) {
            z[k] = bands[k] * rot[k];
        }
        fft_.execute();
        const auto& g = proto_.coeffs;
        for (std::size_t l = 0; l < g.size(); ++l) {
            acc_[l] += g[l] * z[l % M];
        }
        std::copy_n(acc_.begin(), D, out.begin());
        std::move(acc_.begin() + static_cast<std::ptrdiff_t>(D), acc_.end(), acc_.begin());
        std::fill(acc_.end() - static_cast<std::ptrdiff_t>(D), acc_.end(), cplx{});
        ++frame_;
    }

    [[nodiscard]] std::vector<cplx> process(std::span<const SubbandFrame> frames) {
        const auto D = static_cast<std::size_t>(cfg_.decimation());
        std::vector<cplx> out(frames.size() * D);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (frames[i].values.size() != static_cast<std::size_t>(cfg_.M)) {
                throw ContractViolation("SynthesisBank::process: frame " + std::to_string(i) +
                                        " has " + std::to_string(frames[i].values.size()) +
                                        " values, expected M = " + std::to_string(cfg_.M));
            }
            process_frame(frames[i].values, std::span<cplx>(out).subspan(i * D, D));
        }
        return out;
    }

private:
    FilterBankConfig cfg_;
    PrototypeFilter proto_;
    std::vector<cplx> acc_;
    FftPlan fft_;
    std::vector<cplx> rot_[2];
    std::int64_t frame_{0};
};

/// Identity-processing round trip: analysis then synthesis.
[[nodiscard]] inline std::vector<cplx> filterbank_roundtrip(const FilterBankConfig& cfg,
                                                            const PrototypeFilter& p,
                                                            std::span<const cplx> x) {
    AnalysisBank afb(cfg, p);
    SynthesisBank sfb(cfg, p);
    return sfb.process(afb.process(x));
}

/// Integer delay of the identity-processing cascade, found as the peak of its impulse
/// response.
[[nodiscard]] inline int cascade_delay(const FilterBankConfig& cfg, const PrototypeFilter& p) {
    const int D = cfg.decimation();
    const int L = cfg.prototype_length();
    std::vector<cplx> x(static_cast<std::size_t>(2 * L + 2 * D));
    x[0] = 1.0;
    const auto y = filterbank_roundtrip(cfg, p, x);
    const auto it = std::max_element(y.begin(), y.end(),
                                     [](cplx a, cplx b) { return std::norm(a) < std::norm(b); });
    return static_cast<int>(it - y.begin());
}

struct ReconstructionReport {
    int delay{0};
    cplx gain{};
    double nmse_db{0.0};
};

/// Fits complex gain at the given delay and reports the residual NMSE over the steady
/// part of the record (skips `guard` samples at each end).
[[nodiscard]] inline ReconstructionReport measure_reconstruction(std::span<const cplx> x,
                                                                 std::span<const cplx> y,
                                                                 int delay, std::size_t guard) {
    if (y.size() < x.size() || x.size() <= 2 * guard + static_cast<std::size_t>(delay)) {
        throw ContractViolation("measure_reconstruction: record too short");
    }
    cplx xy{};
    double xx = 0.0;
    const std::size_t end = x.size() - guard - static_cast<std::size_t>(delay);
    for (std::size_t n = guard; n < end; ++n) {
        xy += std::conj(x[n]) * y[n + static_cast<std::size_t>(delay)];
        xx += std::norm(x[n]);
    }
    const cplx gain = xy / xx;
    double err = 0.0;
    for (std::size_t n = guard; n < end; ++n) {
        err += std::norm(y[n + static_cast<std::size_t>(delay)] - gain * x[n]);
    }
    return {delay, gain, 10.0 * std::log10(err / (std::norm(gain) * xx))};
}

struct BandCenteringReport {
    int band{0};
    double tone_power{0.0};
    double magnitude_ripple{0.0};     // (max - min)/mean of |band output| in steady state
    double worst_leakage_db{0.0};     // strongest non-adjacent band relative to the tone band
    int worst_band{0};
};

/// Feeds e^{j2πk₀n/M} through the analysis bank and measures steady-state band powers.
[[nodiscard]] inline BandCenteringReport band_centering(const FilterBankConfig& cfg,
                                                        const PrototypeFilter& p, int k0,
                                                        int steady_frames = 64) {
    cfg.validate();
    if (k0 < 0 || k0 >= cfg.M || steady_frames < 1) {
        throw InvalidParameter("band_centering: k0 must lie in [0, M), steady_frames >= 1");
    }
    const int D = cfg.decimation();
    const int warmup = 2 * cfg.K + 2;
    std::vector<cplx> x(static_cast<std::size_t>((warmup + steady_frames) * D));
    for (std::size_t n = 0; n < x.size(); ++n) {
        x[n] = std::polar(1.0, 2.0 * std::numbers::pi * k0 * static_cast<double>(n) / cfg.M);
    }
    AnalysisBank afb(cfg, p);
    const auto frames = afb.process(x);
    std::vector<double> power(static_cast<std::size_t>(cfg.M), 0.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double mean = 0.0;
    for (std::size_t m = static_cast<std::size_t>(warmup); m < frames.size(); ++m) {
        for (std::size_t k = 0; k < power.size(); ++k) {
            power[k] += std::norm(frames[m].values[k]);
        }
        const double a = std::abs(frames[m].values[static_cast<std::size_t>(k0)]);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        mean += a;
    }
    mean /= steady_frames;
    BandCenteringReport r;
    r.band = k0;
    r.tone_power = power[static_cast<std::size_t>(k0)] / steady_frames;
    r.magnitude_ripple = mean > 0.0 ? (hi - lo) / mean : 0.0;
    r.worst_leakage_db = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.M; ++k) {
        const int dist = std::min((k - k0 + cfg.M) % cfg.M, (k0 - k + cfg.M) % cfg.M);
        if (dist <= 1) {
            continue;
        }
        const double rel = 10.0 * std::log10(power[static_cast<std::size_t>(k)] / steady_frames / r.tone_power);
        if (rel > r.worst_leakage_db) {
            r.worst_leakage_db = rel;
            r.worst_band = k;
        }
    }
    return r;
}

} // namespace cdeq

#endif // CDEQ_FILTERBANK_HPP
