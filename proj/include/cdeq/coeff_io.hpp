// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_COEFF_IO_HPP
#define CDEQ_COEFF_IO_HPP

// JSON coefficient files for full-band and filter-bank equalizer designs.

#include <cdeq/equalizer_design.hpp>
#include <cdeq/error.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace cdeq {

inline constexpr int kCoefficientFormatVersion = 1;

/// Rounds to 15 significant digits, the precision stored in coefficient files.
[[nodiscard]] inline double round_significant(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return std::stod(buf);
}

[[nodiscard]] inline nlohmann::json to_json(const WeightingSpec& w) {
    return {{"kind", to_string(w.kind)}, {"omega_c", w.omega_c}, {"roll_off", w.roll_off}};
}

[[nodiscard]] inline WeightingSpec weighting_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "uniform") {
        return WeightingSpec::uniform();
    }
    if (kind == "rc_squared") {
        return WeightingSpec::rc_squared(j.at("omega_c").get<double>(), j.at("roll_off").get<double>());
    }
    throw InvalidParameter("unknown weighting kind '" + kind + "'");
}

[[nodiscard]] inline nlohmann::json to_json(const BandReport& r) {
    return {{"gd_cost_init", r.gd_cost_init},
            {"gd_cost_stage2", r.gd_cost_stage2},
            {"phase_cost_stage3_entry", r.phase_cost_stage3_entry},
            {"phase_cost_stage3", r.phase_cost_stage3},
            {"phase_cost_final", r.phase_cost_final},
            {"gd_cost_final", r.gd_cost_final},
            {"gd_iterations", r.gd_opt.iterations},
            {"joint_iterations", r.joint_opt.iterations},
            {"gd_termination", to_string(r.gd_opt.reason)},
            {"joint_termination", to_string(r.joint_opt.reason)}};
}

[[nodiscard]] inline nlohmann::json to_json(const BandDesign& b) {
    nlohmann::json sections = nlohmann::json::array();
    for (const auto& s : b.cascade.sections) {
        sections.push_back({{"rho", round_significant(s.rho())}, {"theta", round_significant(s.theta())}});
    }
    return {{"band", b.spec.k},
            {"k_prime", b.spec.k_prime},
            {"alpha_prime", round_significant(b.spec.alpha_prime)},
            {"beta_prime", b.spec.beta_prime},
            {"N", b.spec.N},
            {"sections", std::move(sections)},
            {"phi0", round_significant(b.cascade.phi0)},
            {"psi", round_significant(b.psi)},
            {"report", to_json(b.report)}};
}

namespace detail {
inline Termination termination_from_string(const std::string& s) {
    for (auto t : {Termination::GradientTolerance, Termination::MaxIterations, Termination::LineSearchStalled}) {
        if (s == to_string(t)) {
            return t;
        }
    }
    throw InvalidParameter("unknown termination reason '" + s + "'");
}
} // namespace detail

/// Reads a band record. The report block is optional; cost histories are not stored.
[[nodiscard]] inline BandDesign band_from_json(const nlohmann::json& j) {
    BandDesign b;
    b.spec.k = j.at("band").get<int>();
    b.spec.k_prime = j.at("k_prime").get<int>();
    b.spec.alpha_prime = j.at("alpha_prime").get<double>();
    b.spec.beta_prime = j.at("beta_prime").get<int>();
    b.spec.N = j.at("N").get<int>();
    for (const auto& s : j.at("sections")) {
        b.cascade.sections.emplace_back(s.at("rho").get<double>(), s.at("theta").get<double>());
    }
    if (static_cast<int>(b.cascade.sections.size()) != b.spec.N) {
        throw InvalidParameter("band " + std::to_string(b.spec.k) + ": section count does not match N");
    }
    b.cascade.phi0 = j.at("phi0").get<double>();
    b.cascade.band = b.spec.k;
    b.psi = j.at("psi").get<double>();
    if (const auto it = j.find("report"); it != j.end()) {
        const auto& r = *it;
        b.report.gd_cost_init = r.value("gd_cost_init", 0.0);
        b.report.gd_cost_stage2 = r.value("gd_cost_stage2", 0.0);
        b.report.phase_cost_stage3_entry = r.value("phase_cost_stage3_entry", 0.0);
        b.report.phase_cost_stage3 = r.value("phase_cost_stage3", 0.0);
        b.report.phase_cost_final = r.value("phase_cost_final", 0.0);
        b.report.gd_cost_final = r.value("gd_cost_final", 0.0);
        b.report.gd_opt.iterations = r.value("gd_iterations", 0);
        b.report.joint_opt.iterations = r.value("joint_iterations", 0);
        b.report.gd_opt.reason = detail::termination_from_string(r.value("gd_termination", "max_iterations"));
        b.report.joint_opt.reason =
            detail::termination_from_string(r.value("joint_termination", "max_iterations"));
    }
    return b;
}

/// A coefficient file holds either a full-band design or a filter-bank design.
struct CoefficientFile {
    std::string mode;  // "fullband_iir" or "fb_iir"
    double alpha{0.0};
    int M{0};
    int K{0};
    WeightingSpec weighting;
    int grid_points{0};
    std::vector<BandDesign> bands;
};

[[nodiscard]] inline nlohmann::json to_json(const CoefficientFile& f) {
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : f.bands) {
        bands.push_back(to_json(b));
    }
    return {{"format_version", kCoefficientFormatVersion},
            {"mode", f.mode},
            {"alpha", round_significant(f.alpha)},
            {"M", f.M},
            {"K", f.K},
            {"weighting", to_json(f.weighting)},
            {"grid_points", f.grid_points},
            {"bands", std::move(bands)}};
}

[[nodiscard]] inline CoefficientFile coefficient_file_from_json(const nlohmann::json& j) {
    if (j.value("format_version", 0) != kCoefficientFormatVersion) {
        throw InvalidParameter("unsupported coefficient file version");
    }
    CoefficientFile f;
    f.mode = j.at("mode").get<std::string>();
    f.alpha = j.at("alpha").get<double>();
    f.M = j.at("M").get<int>();
    f.K = j.at("K").get<int>();
    f.weighting = weighting_from_json(j.at("weighting"));
    f.grid_points = j.at("grid_points").get<int>();
    for (const auto& b : j.at("bands")) {
        f.bands.push_back(band_from_json(b));
    }
    if (f.mode == "fb_iir" && static_cast<int>(f.bands.size()) != f.M) {
        throw InvalidParameter("coefficient file: expected one record per band");
    }
    if (f.mode == "fullband_iir" && f.bands.size() != 1) {
        throw InvalidParameter("coefficient file: full-band design needs exactly one record");
    }
    if (f.mode != "fb_iir" && f.mode != "fullband_iir") {
        throw InvalidParameter("coefficient file: unknown mode '" + f.mode + "'");
    }
    return f;
}

[[nodiscard]] inline CoefficientFile make_coefficient_file(const EqualizerDesign& d) {
    return {"fb_iir", d.alpha, d.fb.M, d.fb.K, d.weighting, d.grid_points, d.bands};
}

[[nodiscard]] inline CoefficientFile make_coefficient_file(const BandDesign& b, double alpha,
                                                           const WeightingSpec& w, int grid_points) {
    return {"fullband_iir", alpha, 2, 0, w, grid_points, {b}};
}

[[nodiscard]] inline EqualizerDesign to_equalizer_design(const CoefficientFile& f) {
    if (f.mode != "fb_iir") {
        throw InvalidParameter("coefficient file does not hold a filter-bank design");
    }
    EqualizerDesign d;
    d.alpha = f.alpha;
    d.fb = FilterBankConfig{f.M, f.K};
    d.weighting = f.weighting;
    d.grid_points = f.grid_points;
    d.bands = f.bands;
    return d;
}

inline void write_coefficient_file(const std::filesystem::path& path, const CoefficientFile& f) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    out << to_json(f).dump(2) << '\n';
}

[[nodiscard]] inline CoefficientFile read_coefficient_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    try {
        return coefficient_file_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter("malformed coefficient file '" + path.string() + "': " + e.what());
    }
}

} // namespace cdeq

#endif // CDEQ_COEFF_IO_HPP
