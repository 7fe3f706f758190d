// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_REPORT_HPP
#define CDEQ_REPORT_HPP

// CSV and JSON serialisation of link results.

#include <cdeq/coeff_io.hpp>
#include <cdeq/complexity.hpp>
#include <cdeq/link.hpp>

#include <json.hpp>

#include <cmath>
#include <ostream>
#include <span>

namespace cdeq {

[[nodiscard]] inline nlohmann::json to_json(const LinkConfig& c) {
    return {{"baud", c.baud},
            {"oversampling", kOversampling},
            {"lambda0", c.lambda0},
            {"dispersion_ps_nm_km", c.dispersion_ps_nm_km},
            {"length", c.length},
            {"alpha", c.alpha()},
            {"M", c.M},
            {"K", c.K},
            {"prototype_roll_off", c.prototype_roll_off},
            {"weighting", to_json(c.weighting)},
            {"mode", to_string(c.mode)},
            {"snr_db", c.snr_db},
            {"n_symbols", c.n_symbols},
            {"n_pilots", c.n_pilots},
            {"tx_roll_off", c.tx_roll_off},
            {"seed", c.seed}};
}

[[nodiscard]] inline nlohmann::json to_json(const ComplexityReport& r) {
    return {{"n_iir", r.n_iir}, {"M", r.M},         {"K", r.K},         {"kappa", ComplexityReport::kappa},
            {"c_iir", r.c_iir}, {"c_fb_iir", r.c_fb_iir}, {"m_opt", r.m_opt}, {"c_opt", r.c_opt}};
}

[[nodiscard]] inline nlohmann::json to_json(const BerPoint& p) {
    return {{"snr_db", p.snr_db}, {"bits", p.bits}, {"errors", p.errors}, {"ber", p.ber},
            {"synchronized", p.synchronized}};
}

/// Per-band design costs, one entry per band.
[[nodiscard]] inline nlohmann::json band_costs(std::span<const BandDesign> bands) {
    auto out = nlohmann::json::array();
    for (const auto& b : bands) {
        auto j = to_json(b.report);
        j["band"] = b.spec.k;
        j["N"] = b.spec.N;
        out.push_back(std::move(j));
    }
    return out;
}

inline void write_ber_csv(std::ostream& os, std::span<const BerPoint> points) {
    os << "snr_db,bits,errors,ber\n";
    const auto old = os.precision(10);
    for (const auto& p : points) {
        os << p.snr_db << ',' << p.bits << ',' << p.errors << ',' << p.ber << '\n';
    }
    os.precision(old);
}

} // namespace cdeq

#endif // CDEQ_REPORT_HPP
