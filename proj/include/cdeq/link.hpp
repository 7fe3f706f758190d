// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_LINK_HPP
#define CDEQ_LINK_HPP

// Coherent QPSK link: Gray mapping, RRC shaping at 2 samples/symbol, CD channel,
// AWGN, equalizer, matched filter, pilot synchronisation and bit counting.

#include <cdeq/cd_channel.hpp>
#include <cdeq/equalizer_design.hpp>
#include <cdeq/equalizer_runtime.hpp>
#include <cdeq/error.hpp>
#include <cdeq/filterbank.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cdeq {

inline constexpr int kOversampling = 2;

// ---------------------------------------------------------------------------
// QPSK

/// Gray map: first bit sets the sign of I, second of Q; 0 -> +. So 00 -> (1+j)/√2.
[[nodiscard]] inline std::vector<cplx> qpsk_modulate(std::span<const std::uint8_t> bits) {
    if (bits.size() % 2 != 0) {
        throw ContractViolation("qpsk_modulate: odd number of bits");
    }
    const double a = 1.0 / std::numbers::sqrt2;
    std::vector<cplx> out(bits.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {bits[2 * i] ? -a : a, bits[2 * i + 1] ? -a : a};
    }
    return out;
}

[[nodiscard]] inline std::vector<std::uint8_t> qpsk_demodulate(std::span<const cplx> symbols) {
    std::vector<std::uint8_t> bits(2 * symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = symbols[i].real() < 0.0;
        bits[2 * i + 1] = symbols[i].imag() < 0.0;
    }
    return bits;
}

// ---------------------------------------------------------------------------
// Pulse shaping

inline constexpr int kPulseSpanSymbols = 32;

/// Unit-energy RRC, T = 2 samples, `span` symbols long (2·span + 1 taps, centre tap peak).
[[nodiscard]] inline std::vector<double> rrc_taps(double roll_off, int span = kPulseSpanSymbols) {
    if (!(roll_off > 0.0 && roll_off <= 1.0) || span < 1) {
        throw InvalidParameter("rrc_taps: roll_off must lie in (0, 1], span >= 1");
    }
    const int n = kOversampling * span + 1;
    const int c = n / 2;
    std::vector<double> h(static_cast<std::size_t>(n));
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
        h[static_cast<std::size_t>(i)] = rrc_pulse(static_cast<double>(i - c) / kOversampling, roll_off);
        e += h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
    }
    for (auto& v : h) {
        v /= std::sqrt(e);
    }
    return h;
}

/// Full linear convolution with a real FIR.
[[nodiscard]] inline std::vector<cplx> fir_filter(std::span<const cplx> x, std::span<const double> h) {
    if (x.empty() || h.empty()) {
        return {};
    }
    std::vector<cplx> y(x.size() + h.size() - 1);
    for (std::size_t n = 0; n < x.size(); ++n) {
        const cplx v = x[n];
        if (v == cplx{}) {
            continue;
        }
        for (std::size_t k = 0; k < h.size(); ++k) {
            y[n + k] += v * h[k];
        }
    }
    return y;
}

/// Zero-stuffs to 2 samples/symbol and applies the RRC. Symbol i peaks at sample 2i + span.
[[nodiscard]] inline std::vector<cplx> shape_and_upsample(std::span<const cplx> symbols, double roll_off_tx) {
    std::vector<cplx> up(symbols.size() * kOversampling);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        up[kOversampling * i] = symbols[i];
    }
    return fir_filter(up, rrc_taps(roll_off_tx));
}

// ---------------------------------------------------------------------------
// Noise

/// Adds circular Gaussian noise of per-sample variance 10^(-snr_db/10); with unit symbol
/// energy and a unit-energy matched filter this is Es/N0 = snr_db. Infinite SNR is a no-op.
inline void add_awgn(std::span<cplx> samples, double snr_db, std::mt19937_64& rng) {
    if (std::isinf(snr_db) && snr_db > 0.0) {
        return;
    }
    const double sigma = std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (auto& s : samples) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        s += cplx{re, im};
    }
}

// ---------------------------------------------------------------------------
// Synchronisation

struct SyncResult {
    std::size_t delay{0};
    double phase{0.0};
    double peak{0.0}; // normalised correlation at `delay`
    std::vector<cplx> aligned;
};

/// Finds the lag in [lag_begin, lag_end] maximising the normalised pilot correlation,
/// fits one common phase by least squares over the pilots, and returns the symbol stream
/// from that lag on, derotated.
[[nodiscard]] inline SyncResult synchronize(std::span<const cplx> rx, std::span<const cplx> pilots,
                                            std::size_t lag_begin = 0,
                                            std::size_t lag_end = std::numeric_limits<std::size_t>::max(),
                                            double min_peak = 0.5) {
    if (pilots.empty() || rx.size() < pilots.size()) {
        throw ContractViolation("synchronize: need pilots and at least as many received symbols");
    }
    lag_end = std::min(lag_end, rx.size() - pilots.size());
    if (lag_begin > lag_end) {
        throw ContractViolation("synchronize: empty lag range");
    }
    double pp = 0.0;
    for (const auto& p : pilots) {
        pp += std::norm(p);
    }
    SyncResult best;
    cplx best_corr{};
    best.peak = -1.0;
    for (std::size_t d = lag_begin; d <= lag_end; ++d) {
        cplx c{};
        double rr = 0.0;
        for (std::size_t i = 0; i < pilots.size(); ++i) {
            c += std::conj(pilots[i]) * rx[d + i];
            rr += std::norm(rx[d + i]);
        }
        const double peak = rr > 0.0 ? std::abs(c) / std::sqrt(pp * rr) : 0.0;
        if (peak > best.peak) {
            best.peak = peak;
            best.delay = d;
            best_corr = c;
        }
    }
    if (best.peak < min_peak) {
        throw SyncFailure("synchronize: correlation peak " + std::to_string(best.peak) +
                              " below " + std::to_string(min_peak),
                          best.peak);
    }
    best.phase = std::arg(best_corr);
    const cplx derot = std::polar(1.0, -best.phase);
    best.aligned.reserve(rx.size() - best.delay);
    for (std::size_t i = best.delay; i < rx.size(); ++i) {
        best.aligned.push_back(rx[i] * derot);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Monte-Carlo link

enum class EqualizerMode { None, FullbandIir, FbIir };

[[nodiscard]] inline const char* to_string(EqualizerMode m) noexcept {
    switch (m) {
    case EqualizerMode::None: return "none";
    case EqualizerMode::FullbandIir: return "fullband_iir";
    case EqualizerMode::FbIir: return "fb_iir";
    }
    return "unknown";
}

[[nodiscard]] inline EqualizerMode parse_equalizer_mode(const std::string& s) {
    if (s == "none") return EqualizerMode::None;
    if (s == "fullband_iir") return EqualizerMode::FullbandIir;
    if (s == "fb_iir") return EqualizerMode::FbIir;
    throw InvalidParameter("unknown equalizer mode '" + s + "'");
}

struct LinkConfig {
    double baud{28e9};
    double lambda0{1550e-9};          // m
    double dispersion_ps_nm_km{16.0};
    double length{2000e3};            // m
    int M{32};
    int K{8};
    double prototype_roll_off{0.2};
    WeightingSpec weighting{WeightingSpec::rc_squared(0.6 * std::numbers::pi, 0.1)};
    EqualizerMode mode{EqualizerMode::FbIir};
    std::vector<double> snr_db{10.0};
    std::size_t n_symbols{400000};
    std::size_t n_pilots{1000};
    std::uint64_t seed{1};
    double tx_roll_off{0.1};

    [[nodiscard]] double sample_rate() const noexcept { return kOversampling * baud; }
    [[nodiscard]] double alpha() const {
        return compute_alpha(lambda0, dispersion_ps_nm_km, length, sample_rate());
    }
    [[nodiscard]] FilterBankConfig filterbank() const noexcept { return {M, K}; }

    void validate() const {
        if (!(baud > 0.0)) {
            throw InvalidParameter("LinkConfig: baud must be positive");
        }
        if (n_pilots == 0 || n_symbols <= n_pilots) {
            throw InvalidParameter("LinkConfig: need 0 < n_pilots < n_symbols");
        }
        if (!(tx_roll_off > 0.0 && tx_roll_off <= 1.0)) {
            throw InvalidParameter("LinkConfig: tx_roll_off must lie in (0, 1]");
        }
        filterbank().validate();
        weighting.validate();
        (void)alpha();
    }
};

struct BerPoint {
    double snr_db{0.0};
    std::uint64_t bits{0};
    std::uint64_t errors{0};
    double ber{0.0};
    bool synchronized{true};
};

/// Ready-to-run equalizer inputs for one link configuration.
struct LinkEqualizer {
    std::optional<BandDesign> fullband;
    std::optional<EqualizerDesign> filterbank;
};

namespace detail {
inline std::mt19937_64 point_rng(std::uint64_t seed, std::size_t point) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(point), 0x5eedu};
    return std::mt19937_64(seq);
}
} // namespace detail

/// One SNR point. Deterministic for a given (config, seed, point index).
[[nodiscard]] inline BerPoint run_link_point(const LinkConfig& cfg, const LinkEqualizer& eq,
                                             double snr_db, std::size_t point_index) {
    auto rng = detail::point_rng(cfg.seed, point_index);
    const double alpha = cfg.alpha();

    std::vector<std::uint8_t> bits(2 * cfg.n_symbols);
    {
        std::uniform_int_distribution<int> bit(0, 1);
        for (auto& b : bits) {
            b = static_cast<std::uint8_t>(bit(rng));
        }
    }
    const auto symbols = qpsk_modulate(bits);
    const std::span<const cplx> pilots(symbols.data(), cfg.n_pilots);

    // Guards keep the circular channel from wrapping the tail onto the head and leave room
    // for the equalizer to drain.
    const auto spread = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * alpha));
    const std::size_t guard = 2 * spread + 512;
    const auto shaped = shape_and_upsample(symbols, cfg.tx_roll_off);

    int eq_delay = 0;
    std::size_t block = 1;
    std::optional<PrototypeFilter> proto;
    if (cfg.mode == EqualizerMode::FbIir) {
        if (!eq.filterbank) {
            throw ContractViolation("run_link: fb_iir mode needs a filter-bank design");
        }
        proto = design_rrc(cfg.M, cfg.K, cfg.prototype_roll_off);
        block = static_cast<std::size_t>(cfg.M / 2);
    } else if (cfg.mode == EqualizerMode::FullbandIir && !eq.fullband) {
        throw ContractViolation("run_link: fullband_iir mode needs a full-band design");
    }
    std::size_t tail = guard + static_cast<std::size_t>(cfg.K * cfg.M) + 4 * spread;
    std::size_t total = guard + shaped.size() + tail;
    total += (block - total % block) % block;

    std::vector<cplx> tx(total);
    std::copy(shaped.begin(), shaped.end(), tx.begin() + static_cast<std::ptrdiff_t>(guard));
    auto rx = apply_cd(tx, alpha);
    add_awgn(rx, snr_db, rng);

    std::vector<cplx> equalized;
    switch (cfg.mode) {
    case EqualizerMode::None:
        equalized = std::move(rx);
        break;
    case EqualizerMode::FullbandIir: {
        FullbandEqualizer e(*eq.fullband);
        eq_delay = e.delay();
        equalized = e.process(rx);
        break;
    }
    case EqualizerMode::FbIir: {
        FilterBankEqualizer e(*eq.filterbank, *proto);
        eq_delay = e.delay();
        equalized = e.process(rx);
        break;
    }
    }

    const auto taps = rrc_taps(cfg.tx_roll_off);
    const auto mf = fir_filter(equalized, taps);

    // Nominal position of symbol 0 in the matched-filter output.
    const std::size_t nominal = guard + 2 * static_cast<std::size_t>(kPulseSpanSymbols) +
                                static_cast<std::size_t>(eq_delay);
    const std::size_t phase = nominal % kOversampling;
    std::vector<cplx> rx_symbols;
    rx_symbols.reserve(mf.size() / kOversampling + 1);
    for (std::size_t i = phase; i < mf.size(); i += kOversampling) {
        rx_symbols.push_back(mf[i]);
    }
    const std::size_t nominal_lag = nominal / kOversampling;
    constexpr std::size_t search = 64;
    const std::size_t lag_begin = nominal_lag > search ? nominal_lag - search : 0;

    BerPoint pt;
    pt.snr_db = snr_db;
    std::vector<cplx> aligned;
    try {
        aligned = synchronize(rx_symbols, pilots, lag_begin, nominal_lag + search).aligned;
    } catch (const SyncFailure&) {
        if (cfg.mode != EqualizerMode::None) {
            throw;
        }
        // An unequalized CD link has no recoverable timing; fall back to the nominal lag.
        pt.synchronized = false;
        cplx c{};
        for (std::size_t i = 0; i < pilots.size(); ++i) {
            c += std::conj(pilots[i]) * rx_symbols[nominal_lag + i];
        }
        const cplx derot = std::polar(1.0, -std::arg(c));
        for (std::size_t i = nominal_lag; i < rx_symbols.size(); ++i) {
            aligned.push_back(rx_symbols[i] * derot);
        }
    }
    if (aligned.size() < cfg.n_symbols) {
        throw ContractViolation("run_link: received stream shorter than the transmitted frame");
    }
    const auto decided = qpsk_demodulate(std::span<const cplx>(aligned).subspan(cfg.n_pilots, cfg.n_symbols - cfg.n_pilots));
    for (std::size_t i = 0; i < decided.size(); ++i) {
        pt.errors += decided[i] != bits[2 * cfg.n_pilots + i];
    }
    pt.bits = decided.size();
    pt.ber = static_cast<double>(pt.errors) / static_cast<double>(pt.bits);
    return pt;
}

[[nodiscard]] inline std::vector<BerPoint> run_link(const LinkConfig& cfg, const LinkEqualizer& eq) {
    cfg.validate();
    std::vector<BerPoint> out;
    out.reserve(cfg.snr_db.size());
    for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
        out.push_back(run_link_point(cfg, eq, cfg.snr_db[i], i));
    }
    return out;
}

/// Builds whatever design the configured mode needs.
[[nodiscard]] inline LinkEqualizer design_link_equalizer(const LinkConfig& cfg, int grid_points = 2048,
                                                         const OptimizerSettings& settings = {},
                                                         unsigned threads = 1) {
    cfg.validate();
    LinkEqualizer eq;
    const double alpha = cfg.alpha();
    if (cfg.mode == EqualizerMode::FullbandIir) {
        const FrequencyGrid grid(grid_points);
        eq.fullband = design_band(fullband_spec(alpha), cfg.weighting, grid, settings);
    } else if (cfg.mode == EqualizerMode::FbIir) {
        const FrequencyGrid grid(grid_points);
        eq.filterbank = design_all_bands(alpha, cfg.filterbank(), cfg.weighting, grid, settings, threads);
    }
    return eq;
}

/// Gray-QPSK bit error probability Q(√(Es/N0)).
[[nodiscard]] inline double qpsk_theory_ber(double snr_db) noexcept {
    const double x = std::sqrt(std::pow(10.0, snr_db / 10.0));
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// SNR where the curve crosses `target`, by linear interpolation of log10(BER) between
/// the first bracketing pair. NaN if the curve never brackets the target.
[[nodiscard]] inline double snr_at_ber(std::span<const BerPoint> curve, double target) {
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const auto& a = curve[i - 1];
        const auto& b = curve[i];
        if (a.ber >= target && b.ber <= target && a.ber > 0.0 && b.ber > 0.0 && a.ber != b.ber) {
            const double t = (std::log10(a.ber) - std::log10(target)) /
                             (std::log10(a.ber) - std::log10(b.ber));
            return a.snr_db + t * (b.snr_db - a.snr_db);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace cdeq

#endif // CDEQ_LINK_HPP
