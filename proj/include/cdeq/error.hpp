// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_ERROR_HPP
#define CDEQ_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace cdeq {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter is out of its documented domain (negative length, odd M, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A caller broke a structural precondition (buffer sizes, frame lengths).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Desired group delay is negative somewhere, so no stable all-pass can follow it.
class InfeasibleTarget : public Error {
public:
    using Error::Error;
};

/// Closed-form phase fit is undefined because the weighted integral vanished.
class AmbiguousPhase : public Error {
public:
    using Error::Error;
};

/// Minimizer met a non-finite cost or gradient.
class Divergence : public Error {
public:
    Divergence(const std::string& what, std::vector<double> last_good)
        : Error(what), last_good_(std::move(last_good)) {}

    [[nodiscard]] const std::vector<double>& last_good() const noexcept { return last_good_; }

private:
    std::vector<double> last_good_;
};

/// A band design stage failed; carries band index and stage name.
class DesignFailure : public Error {
public:
    DesignFailure(int band, std::string stage, const std::string& detail)
        : Error("band " + std::to_string(band) + ", stage '" + stage + "': " + detail),
          band_(band), stage_(std::move(stage)) {}

    [[nodiscard]] int band() const noexcept { return band_; }
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    int band_;
    std::string stage_;
};

/// Pilot correlation too weak to trust the recovered timing.
class SyncFailure : public Error {
public:
    SyncFailure(const std::string& what, double peak) : Error(what), peak_(peak) {}
    [[nodiscard]] double peak() const noexcept { return peak_; }

private:
    double peak_;
};

} // namespace cdeq

#endif // CDEQ_ERROR_HPP
