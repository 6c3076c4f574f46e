#pragma once

// Microwave cavity characterization: Q-circle coupling coefficients, loaded and
// unloaded Q, cavity decay rate, thermal occupancy of the mode, and conversion
// of detected output power to intracavity photon number.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "zfmaser/error.hpp"
#include "zfmaser/units.hpp"

namespace zfmaser {

/// Diameters read off the reflection polar plot. d2 is the auxiliary circle
/// tangent to both the Q-circle and |Gamma| = 1; absent for lossless coupling.
struct QCircleGeometry {
    double d = 0.0;
    std::optional<double> d2;
};

inline double coupling_from_qcircle(const QCircleGeometry& g) {
    if (!std::isfinite(g.d) || g.d < 0.0 || g.d > 2.0)
        throw InvalidGeometry("Q-circle diameter must lie in [0, 2]");
    if (g.d2) {
        const double d2 = g.d2.value();
        if (!std::isfinite(d2) || d2 <= 1.0 || d2 > 2.0)
            throw InvalidGeometry("auxiliary circle diameter must lie in (1, 2]");
        if (g.d > d2) throw InvalidGeometry("Q-circle cannot be larger than the auxiliary circle");
        return g.d / (d2 - 1.0);
    }
    if (g.d >= 2.0) throw InvalidGeometry("lossless Q-circle of diameter 2 has unbounded coupling");
    return g.d / (2.0 - g.d);
}

inline double loaded_q(double f0, double f_low, double f_high) {
    if (!(f_high > f_low)) throw InvalidInput("loaded_q: half-power bandwidth must be positive");
    if (!(f_low < f0 && f0 < f_high))
        throw InvalidInput("loaded_q: centre frequency must lie inside the half-power band");
    return f0 / (f_high - f_low);
}

inline double unloaded_q(double q_loaded, double k1, double k2) {
    if (!(q_loaded > 0.0) || !(k1 >= 0.0) || !(k2 >= 0.0))
        throw InvalidInput("unloaded_q: need Q_L > 0 and non-negative couplings");
    return q_loaded * (1.0 + k1 + k2);
}

/// Angular energy decay rate 2 pi f / Q_L, in s^-1.
inline double cavity_decay_rate(double f_mode, double q_loaded) {
    if (!(f_mode > 0.0) || !(q_loaded > 0.0))
        throw InvalidInput("cavity_decay_rate: frequency and Q_L must be positive");
    return two_pi * f_mode / q_loaded;
}

/// Bose-Einstein occupancy of a mode at frequency f (Hz) and temperature T (K).
inline double thermal_photons(double f, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw InvalidInput("thermal_photons: temperature must be positive");
    if (!(f > 0.0) || !std::isfinite(f)) throw InvalidInput("thermal_photons: frequency must be positive");
    const double x = PhysConstants::h * f / (PhysConstants::k_B * temperature);
    return 1.0 / std::expm1(x);
}

struct CavityCharacterization {
    double f_mode;
    double q_loaded;
    double k1;
    double k2;
    double kappa_c;
    double temperature;
    double n_bar;

    static CavityCharacterization from_measurements(double f_mode, double q_loaded, double k1,
                                                    double k2, double temperature) {
        if (!(k1 >= 0.0) || !(k2 >= 0.0)) throw InvalidInput("couplings must be non-negative");
        return {f_mode, q_loaded, k1, k2, cavity_decay_rate(f_mode, q_loaded), temperature,
                thermal_photons(f_mode, temperature)};
    }

    double q_unloaded() const { return unloaded_q(q_loaded, k1, k2); }
};

/// Intracavity photon number from detected output power:
/// <a^dag a> = P (1 + K) / (h f kappa_c K).
inline double power_to_photons(double p_watts, double coupling, double kappa_c, double f) {
    if (!(p_watts >= 0.0)) throw InvalidInput("power_to_photons: power must be non-negative");
    if (!(coupling > 0.0))
        throw InvalidInput("power_to_photons: coupling must be positive (no output port otherwise)");
    if (!(kappa_c > 0.0) || !(f > 0.0))
        throw InvalidInput("power_to_photons: kappa_c and f must be positive");
    return p_watts * (1.0 + coupling) / (PhysConstants::h * f * kappa_c * coupling);
}

inline TimeTrace power_to_photons(const TimeTrace& power, double coupling, double kappa_c,
                                  double f) {
    std::vector<double> y(power.size());
    if (power.unit() == Unit::dBm) {
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = power_to_photons(dbm_to_watts(power.y()[i]), coupling, kappa_c, f);
    } else {
        power.require(Unit::Watts, "power_to_photons");
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = power_to_photons(power.y()[i], coupling, kappa_c, f);
    }
    return TimeTrace({power.t().begin(), power.t().end()}, std::move(y), Unit::Photons);
}

/// Index of the first sample exceeding mean + 5 sigma of the leading
/// calibration segment (the first tenth of the trace, at least 10 samples).
/// Returns size() if no sample qualifies.
inline std::size_t detect_burst_onset(const TimeTrace& trace, std::size_t min_calibration = 10) {
    const std::size_t n = trace.size();
    const std::size_t m = std::max(min_calibration, n / 10);
    if (n <= m) return n;
    const auto y = trace.y();
    const double mean = std::accumulate(y.begin(), y.begin() + m, 0.0) / m;
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) var += (y[i] - mean) * (y[i] - mean);
    const double sd = std::sqrt(var / m);
    const double level = mean + 5.0 * sd;
    for (std::size_t i = m; i < n; ++i)
        if (y[i] > level) return i;
    return n;
}

struct BaselineCorrection {
    TimeTrace trace;
    double shift;
    std::size_t window_samples;
};

/// Additive shift so that the mean over [t0, t0 + pre_window) equals n_bar.
inline BaselineCorrection baseline_correct(const TimeTrace& trace, double n_bar,
                                           double pre_window) {
    trace.require(Unit::Photons, "baseline_correct");
    if (trace.empty()) throw InvalidInput("baseline_correct: empty trace");
    const auto t = trace.t();
    const auto y = trace.y();
    std::size_t count = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < t.size() && t[i] < t[0] + pre_window; ++i, ++count) sum += y[i];
    if (count < 10)
        throw InvalidInput("baseline_correct: pre-burst window holds " + std::to_string(count) +
                           " samples, need at least 10");
    const double shift = n_bar - sum / static_cast<double>(count);
    std::vector<double> out(y.begin(), y.end());
    for (double& v : out) v += shift;
    return {TimeTrace({t.begin(), t.end()}, std::move(out), Unit::Photons), shift, count};
}

/// Baseline correction with the window ending at the detected burst onset.
inline BaselineCorrection baseline_correct(const TimeTrace& trace, double n_bar) {
    trace.require(Unit::Photons, "baseline_correct");
    const std::size_t onset = detect_burst_onset(trace);
    if (onset == 0 || onset >= trace.size())
        throw InvalidInput("baseline_correct: no burst onset found");
    const double window = trace.t()[onset] - trace.t()[0];
    return baseline_correct(trace, n_bar, window);
}

struct CircleFit {
    std::complex<double> center;
    double radius;
    double diameter() const { return 2.0 * radius; }
};

/// Algebraic (Kasa) least-squares circle through complex reflection samples:
/// minimizes sum (x^2 + y^2 + D x + E y + F)^2.
inline CircleFit fit_circle_kasa(std::span<const std::complex<double>> pts) {
    if (pts.size() < 3) throw InvalidInput("fit_circle_kasa: need at least 3 points");
    Eigen::MatrixXd A(pts.size(), 3);
    Eigen::VectorXd b(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i].real(), y = pts[i].imag();
        A(i, 0) = x;
        A(i, 1) = y;
        A(i, 2) = 1.0;
        b(i) = -(x * x + y * y);
    }
    const auto qr = A.colPivHouseholderQr();
    if (qr.rank() < 3) throw InvalidInput("fit_circle_kasa: degenerate point set");
    const Eigen::Vector3d sol = qr.solve(b);
    const std::complex<double> c(-0.5 * sol(0), -0.5 * sol(1));
    const double r2 = std::norm(c) - sol(2);
    if (!(r2 > 0.0)) throw InvalidInput("fit_circle_kasa: points are collinear");
    return {c, std::sqrt(r2)};
}

}  // namespace zfmaser
