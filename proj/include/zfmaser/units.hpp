#pragma once

// Physical constants, unit conversions and the TimeTrace container shared by
// every analysis module. Rates are kept in s^-1 internally; where a value is
// quoted as "2pi x f" it is converted once, on ingestion, to 2*pi*f.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zfmaser/error.hpp"

namespace zfmaser {

struct PhysConstants {
    static constexpr double h = 6.62607015e-34;   // J s (exact, SI 2019)
    static constexpr double k_B = 1.380649e-23;   // J/K (exact, SI 2019)
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

enum class Unit { dBm, Watts, Photons, Volts, Dimensionless, Counts };

inline std::string_view unit_name(Unit u) {
    switch (u) {
        case Unit::dBm: return "dBm";
        case Unit::Watts: return "watts";
        case Unit::Photons: return "photons";
        case Unit::Volts: return "volts";
        case Unit::Dimensionless: return "dimensionless";
        case Unit::Counts: return "counts";
    }
    return "unknown";
}

inline Unit parse_unit(std::string_view s) {
    if (s == "dBm" || s == "dbm") return Unit::dBm;
    if (s == "watts" || s == "W") return Unit::Watts;
    if (s == "photons") return Unit::Photons;
    if (s == "volts" || s == "V") return Unit::Volts;
    if (s == "dimensionless") return Unit::Dimensionless;
    if (s == "counts") return Unit::Counts;
    throw InvalidInput("unknown unit '" + std::string(s) + "'");
}

inline double dbm_to_watts(double p_dbm) {
    if (!std::isfinite(p_dbm)) throw InvalidInput("dbm_to_watts: non-finite power");
    return std::pow(10.0, (p_dbm - 30.0) / 10.0);
}

inline double watts_to_dbm(double p_watts) {
    if (!std::isfinite(p_watts) || p_watts <= 0.0)
        throw InvalidInput("watts_to_dbm: power must be finite and positive");
    return 10.0 * std::log10(p_watts) + 30.0;
}

inline constexpr double ordinary_to_angular(double f_hz) { return two_pi * f_hz; }
inline constexpr double angular_to_ordinary(double omega) { return omega / two_pi; }

/// Reads a rate quoted either as a plain s^-1 value or as "2pi x value".
inline constexpr double rate_from_input(double value, bool angular) {
    return angular ? ordinary_to_angular(value) : value;
}

inline constexpr double us_to_s(double t_us) { return t_us * 1e-6; }
inline constexpr double s_to_us(double t_s) { return t_s * 1e6; }

/// Sampled 1-D signal. Times are in seconds, strictly increasing; values are
/// finite and carry a unit tag that consumers check with require().
class TimeTrace {
public:
    TimeTrace(std::vector<double> t, std::vector<double> y, Unit unit)
        : t_(std::move(t)), y_(std::move(y)), unit_(unit) {
        if (t_.size() != y_.size())
            throw InvalidInput("TimeTrace: time and value columns differ in length");
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (!std::isfinite(t_[i]) || !std::isfinite(y_[i]))
                throw InvalidInput("TimeTrace: non-finite sample at index " + std::to_string(i));
            if (i > 0 && !(t_[i] > t_[i - 1]))
                throw InvalidInput("TimeTrace: times not strictly increasing at index " +
                                   std::to_string(i));
        }
    }

    std::span<const double> t() const noexcept { return t_; }
    std::span<const double> y() const noexcept { return y_; }
    Unit unit() const noexcept { return unit_; }
    std::size_t size() const noexcept { return t_.size(); }
    bool empty() const noexcept { return t_.empty(); }

    const TimeTrace& require(Unit expected, std::string_view who) const {
        if (unit_ != expected)
            throw InvalidInput(std::string(who) + ": expected a trace in " +
                               std::string(unit_name(expected)) + ", got " +
                               std::string(unit_name(unit_)));
        return *this;
    }

private:
    std::vector<double> t_;
    std::vector<double> y_;
    Unit unit_;
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = a;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

}  // namespace zfmaser
