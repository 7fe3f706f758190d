// SPDX-License-Identifier: Apache-2.0
// cdeq: design, simulate, complexity and fb-selftest front end.

#include <cdeq/coeff_io.hpp>
#include <cdeq/complexity.hpp>
#include <cdeq/filterbank.hpp>
#include <cdeq/link.hpp>
#include <cdeq/report.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>

namespace {

using namespace cdeq;

// Flags shared by every command that touches the channel or the bank. Long names match
// the config-file keys.
struct CommonOptions {
    LinkConfig link;
    std::string mode{"fb_iir"};
    std::string weighting{"rc_squared"};
    double omega_c{0.6 * std::numbers::pi};
    double weighting_roll_off{0.1};
    int grid_points{0}; // 0: 2048 for sub-bands, 8192 for the full band
    int max_iterations{500};
    unsigned threads{1};

    void add_channel(CLI::App& app) {
        app.add_option("--baud", link.baud, "Symbol rate (symbols/s)")->capture_default_str();
        app.add_option("--lambda0", link.lambda0, "Carrier wavelength (m)")->capture_default_str();
        app.add_option("--dispersion_ps_nm_km", link.dispersion_ps_nm_km, "Fiber dispersion (ps/nm/km)")
            ->capture_default_str();
        app.add_option("--length", link.length, "Fiber length (m)")->capture_default_str();
    }

    void add_bank(CLI::App& app) {
        app.add_option("--M", link.M, "Number of sub-bands")->capture_default_str();
        app.add_option("--K", link.K, "Prototype length factor (L = K*M)")->capture_default_str();
        app.add_option("--prototype_roll_off", link.prototype_roll_off, "Prototype RRC roll-off")
            ->capture_default_str();
    }

    void add_design(CLI::App& app) {
        app.add_option("--mode", mode, "Equalizer: none, fullband_iir or fb_iir")
            ->check(CLI::IsMember({"none", "fullband_iir", "fb_iir"}))
            ->capture_default_str();
        app.add_option("--weighting", weighting, "Design weighting: uniform or rc_squared")
            ->check(CLI::IsMember({"uniform", "rc_squared"}))
            ->capture_default_str();
        app.add_option("--omega_c", omega_c, "Weighting cutoff (rad, sub-band domain)")->capture_default_str();
        app.add_option("--weighting_roll_off", weighting_roll_off, "Weighting roll-off")->capture_default_str();
        app.add_option("--grid_points", grid_points, "Design grid size (0 = automatic)")->capture_default_str();
        app.add_option("--max_iterations", max_iterations, "Optimizer iterations per stage")
            ->capture_default_str();
        app.add_option("--threads", threads, "Worker threads for band design")->capture_default_str();
    }

    void finalize() {
        link.mode = parse_equalizer_mode(mode);
        link.weighting = weighting == "uniform" ? WeightingSpec::uniform()
                                                : WeightingSpec::rc_squared(omega_c, weighting_roll_off);
        if (grid_points == 0) {
            grid_points = link.mode == EqualizerMode::FullbandIir ? 8192 : 2048;
        }
    }

    [[nodiscard]] OptimizerSettings settings() const {
        OptimizerSettings s;
        s.max_iterations = max_iterations;
        return s;
    }
};

std::optional<CoefficientFile> coefficient_file_for(const LinkConfig& cfg, const LinkEqualizer& eq,
                                                    int grid_points) {
    if (eq.filterbank) {
        return make_coefficient_file(*eq.filterbank);
    }
    if (eq.fullband) {
        return make_coefficient_file(*eq.fullband, cfg.alpha(), cfg.weighting, grid_points);
    }
    return std::nullopt;
}

LinkEqualizer equalizer_from_file(const LinkConfig& cfg, const CoefficientFile& f) {
    const double rel = std::abs(f.alpha - cfg.alpha()) / std::max(1e-12, cfg.alpha());
    if (rel > 1e-9) {
        throw InvalidParameter("coefficient file alpha " + std::to_string(f.alpha) +
                               " does not match the configured link (" + std::to_string(cfg.alpha()) + ")");
    }
    LinkEqualizer eq;
    if (cfg.mode == EqualizerMode::FbIir) {
        if (f.mode != "fb_iir" || f.M != cfg.M) {
            throw InvalidParameter("coefficient file does not hold an M=" + std::to_string(cfg.M) +
                                   " filter-bank design");
        }
        eq.filterbank = to_equalizer_design(f);
        eq.filterbank->fb.K = cfg.K; // band equalizers do not depend on the prototype
    } else if (cfg.mode == EqualizerMode::FullbandIir) {
        if (f.mode != "fullband_iir") {
            throw InvalidParameter("coefficient file does not hold a full-band design");
        }
        eq.fullband = f.bands.front();
    }
    return eq;
}

nlohmann::json design_summary(const LinkEqualizer& eq) {
    if (eq.filterbank) {
        return band_costs(eq.filterbank->bands);
    }
    if (eq.fullband) {
        return band_costs(std::span<const BandDesign>(&*eq.fullband, 1));
    }
    return nlohmann::json::array();
}

int full_band_order(const LinkConfig& cfg) { return fullband_spec(cfg.alpha()).N; }

void write_json(const std::string& path, const nlohmann::json& j) {
    if (path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open '" + path + "' for writing");
    }
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

int cmd_design(int argc, char** argv) {
    CLI::App app{"Design equalizer coefficients and write them to a file", "cdeq design"};
    CommonOptions opt;
    std::string output{"coefficients.json"};
    std::string summary;
    opt.add_channel(app);
    opt.add_bank(app);
    opt.add_design(app);
    app.add_option("-o,--output", output, "Coefficient file to write")->capture_default_str();
    app.add_option("--summary", summary, "Optional JSON summary of per-band costs ('-' for stdout)");
    app.set_config("--config", "", "Flat key = value config file");
    CLI11_PARSE(app, argc, argv);
    opt.finalize();
    if (opt.link.mode == EqualizerMode::None) {
        std::cerr << "design: mode 'none' has nothing to design\n";
        return 2;
    }
    const auto eq = design_link_equalizer(opt.link, opt.grid_points, opt.settings(), opt.threads);
    write_coefficient_file(output, *coefficient_file_for(opt.link, eq, opt.grid_points));
    std::cerr << "wrote " << output << '\n';
    if (!summary.empty()) {
        write_json(summary, {{"alpha", opt.link.alpha()},
                             {"mode", opt.mode},
                             {"weighting", to_json(opt.link.weighting)},
                             {"grid_points", opt.grid_points},
                             {"bands", design_summary(eq)}});
    }
    return 0;
}

int cmd_simulate(int argc, char** argv) {
    CLI::App app{"Monte-Carlo BER simulation of the equalized QPSK link", "cdeq simulate"};
    CommonOptions opt;
    std::string coefficients;
    std::string save_coefficients;
    std::string csv{"-"};
    std::string json;
    opt.add_channel(app);
    opt.add_bank(app);
    opt.add_design(app);
    app.add_option("--snr_db", opt.link.snr_db, "Es/N0 points (dB), comma separated")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--n_symbols", opt.link.n_symbols, "Symbols per SNR point, pilots included")
        ->capture_default_str();
    app.add_option("--n_pilots", opt.link.n_pilots, "Leading pilot symbols")->capture_default_str();
    app.add_option("--tx_roll_off", opt.link.tx_roll_off, "Transmit/receive RRC roll-off")
        ->capture_default_str();
    app.add_option("--seed", opt.link.seed, "Random seed")->required();
    app.add_option("--coefficients", coefficients, "Read the equalizer from this file instead of designing");
    app.add_option("--save_coefficients", save_coefficients, "Write the designed equalizer here");
    app.add_option("--csv", csv, "BER table ('-' for stdout)")->capture_default_str();
    app.add_option("--json", json, "JSON summary path ('-' for stdout)");
    app.set_config("--config", "", "Flat key = value config file");
    CLI11_PARSE(app, argc, argv);
    opt.finalize();
    opt.link.validate();

    LinkEqualizer eq;
    if (!coefficients.empty() && opt.link.mode != EqualizerMode::None) {
        eq = equalizer_from_file(opt.link, read_coefficient_file(coefficients));
    } else {
        eq = design_link_equalizer(opt.link, opt.grid_points, opt.settings(), opt.threads);
        if (!save_coefficients.empty()) {
            if (const auto f = coefficient_file_for(opt.link, eq, opt.grid_points)) {
                write_coefficient_file(save_coefficients, *f);
            }
        }
    }

    const auto points = run_link(opt.link, eq);
    if (csv == "-") {
        write_ber_csv(std::cout, points);
    } else {
        std::ofstream out(csv);
        if (!out) {
            throw Error("cannot open '" + csv + "' for writing");
        }
        write_ber_csv(out, points);
    }
    if (!json.empty()) {
        auto ber = nlohmann::json::array();
        for (const auto& p : points) {
            ber.push_back(to_json(p));
        }
        const double at = snr_at_ber(points, 1e-3);
        const int n_iir = full_band_order(opt.link);
        write_json(json, {{"config", to_json(opt.link)},
                          {"complexity", n_iir > 0 ? to_json(complexity_report(n_iir, opt.link.M, opt.link.K))
                                                   : nlohmann::json()},
                          {"bands", design_summary(eq)},
                          {"ber", std::move(ber)},
                          {"snr_at_ber_1e-3", std::isnan(at) ? nlohmann::json() : nlohmann::json(at)}});
    }
    return 0;
}

int cmd_complexity(int argc, char** argv) {
    CLI::App app{"Real multiplications per sample, full-band vs filter-bank equalizer", "cdeq complexity"};
    CommonOptions opt;
    int n_iir = 0;
    bool as_json = false;
    opt.add_channel(app);
    opt.add_bank(app);
    app.add_option("--n_iir", n_iir, "Full-band section count (default: derived from the channel)");
    app.add_flag("--json", as_json, "Print JSON instead of text");
    app.set_config("--config", "", "Flat key = value config file");
    CLI11_PARSE(app, argc, argv);
    if (n_iir == 0) {
        n_iir = full_band_order(opt.link);
    }
    const auto r = complexity_report(n_iir, opt.link.M, opt.link.K);
    if (as_json) {
        std::cout << to_json(r).dump(2) << '\n';
        return 0;
    }
    std::printf("N_IIR     %d\n", r.n_iir);
    std::printf("M, K      %d, %d (kappa %d)\n", r.M, r.K, ComplexityReport::kappa);
    std::printf("C_IIR     %.4g\n", r.c_iir);
    std::printf("C_FB_IIR  %.4g\n", r.c_fb_iir);
    std::printf("M_opt     %.1f\n", r.m_opt);
    std::printf("C_opt     %.2f\n", r.c_opt);
    return 0;
}

int cmd_fb_selftest(int argc, char** argv) {
    CLI::App app{"Filter-bank reconstruction and band-centering checks", "cdeq fb-selftest"};
    CommonOptions opt;
    std::size_t n_samples = 1 << 16;
    std::uint64_t seed = 1;
    double nmse_limit = -30.0;
    double leakage_limit = -40.0;
    opt.add_bank(app);
    app.add_option("--n_samples", n_samples, "Length of the random test signal")->capture_default_str();
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--nmse_limit", nmse_limit, "Reconstruction NMSE bound (dB)")->capture_default_str();
    app.add_option("--leakage_limit", leakage_limit, "Non-adjacent band leakage bound (dB)")
        ->capture_default_str();
    app.set_config("--config", "", "Flat key = value config file");
    CLI11_PARSE(app, argc, argv);

    const FilterBankConfig cfg = opt.link.filterbank();
    const auto proto = design_rrc(cfg.M, cfg.K, opt.link.prototype_roll_off);
    const auto D = static_cast<std::size_t>(cfg.decimation());
    n_samples += (D - n_samples % D) % D;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::vector<cplx> x(n_samples);
    for (auto& v : x) {
        v = {gauss(rng), gauss(rng)};
    }
    const int delay = cascade_delay(cfg, proto);
    const auto y = filterbank_roundtrip(cfg, proto, x);
    const auto rec = measure_reconstruction(x, y, delay, static_cast<std::size_t>(cfg.prototype_length()));

    double worst = -std::numeric_limits<double>::infinity();
    int worst_tone = 0;
    for (int k = 0; k < cfg.M; ++k) {
        const auto bc = band_centering(cfg, proto, k);
        if (bc.worst_leakage_db > worst) {
            worst = bc.worst_leakage_db;
            worst_tone = k;
        }
    }
    const bool nmse_ok = rec.nmse_db <= nmse_limit;
    const bool leak_ok = worst <= leakage_limit;
    std::printf("M=%d K=%d roll_off=%g\n", cfg.M, cfg.K, opt.link.prototype_roll_off);
    std::printf("cascade delay      %d samples\n", delay);
    std::printf("passband gain      %.6f\n", std::abs(rec.gain));
    std::printf("%s reconstruction NMSE %.2f dB (limit %.1f dB)\n", nmse_ok ? "PASS" : "FAIL", rec.nmse_db,
                nmse_limit);
    std::printf("%s worst non-adjacent leakage %.2f dB, tone band %d (limit %.1f dB)\n", leak_ok ? "PASS" : "FAIL",
                worst, worst_tone, leakage_limit);
    return nmse_ok && leak_ok ? 0 : 1;
}

void usage() {
    std::cout << "usage: cdeq <command> [options]\n\n"
                 "commands:\n"
                 "  design       design equalizer coefficients and write them to a file\n"
                 "  simulate     Monte-Carlo BER of the QPSK link (requires --seed)\n"
                 "  complexity   real multiplications per sample\n"
                 "  fb-selftest  filter-bank reconstruction and band-centering checks\n\n"
                 "Every command accepts --config FILE with flat `key = value` lines whose keys\n"
                 "are the long option names. Run `cdeq <command> --help` for its options.\n";
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        usage();
        return 2;
    }
    const std::string cmd = argv[1];
    if (cmd == "-h" || cmd == "--help" || cmd == "help") {
        usage();
        return 0;
    }
    // Each command parses its own argv so that --config applies to its options.
    const int sub_argc = argc - 1;
    char** sub_argv = argv + 1;
    try {
        if (cmd == "design") return cmd_design(sub_argc, sub_argv);
        if (cmd == "simulate") return cmd_simulate(sub_argc, sub_argv);
        if (cmd == "complexity") return cmd_complexity(sub_argc, sub_argv);
        if (cmd == "fb-selftest") return cmd_fb_selftest(sub_argc, sub_argv);
    } catch (const cdeq::Error& e) {
        std::cerr << "cdeq " << cmd << ": " << e.what() << '\n';
        return 1;
    }
    std::cerr << "unknown command '" << cmd << "'\n";
    usage();
    return 2;
}
