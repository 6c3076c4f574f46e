#pragma once

// Deterministic synthetic datasets (seeded mt19937_64) used as fit oracles.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "zfmaser/cqed.hpp"
#include "zfmaser/spectro.hpp"
#include "zfmaser/triplet.hpp"
#include "zfmaser/units.hpp"

namespace zfmaser::synthetic {

/// Biexponential trEPR transient with additive Gaussian noise of
/// sd = noise * max|signal|.
inline TimeTrace trepr(const BiexpFit& p, std::span<const double> t, double noise, std::uint64_t seed) {
    auto clean = predicted_trepr_signal(p, t);
    std::vector<double> y(clean.y().begin(), clean.y().end());
    double peak = 0.0;
    for (double v : y) peak = std::max(peak, std::abs(v));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    if (noise > 0.0)
        for (double& v : y) v += noise * peak * nd(rng);
    return {std::vector<double>(t.begin(), t.end()), std::move(y), Unit::Dimensionless};
}

/// Simulated photon-number burst; noise is a relative (log-normal) scatter.
inline TimeTrace maser_burst(const MaserSystemParams& p, double inversion0, std::span<const double> t,
                             double noise, std::uint64_t seed,
                             const MaserSimOptions& sim = {.companion_run = false}) {
    const auto tr = simulate_maser(p, MaserState::initial(p.n_bar, inversion0), t, sim);
    auto y = tr.photon_numbers();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    if (noise > 0.0)
        for (double& v : y) v *= std::exp(noise * nd(rng));
    return {std::vector<double>(t.begin(), t.end()), std::move(y), Unit::Photons};
}

struct Rank2TasSpec {
    double tau_decay_ps = 450.0;   // excited-state band, decays
    double tau_rise_ps = 650.0;    // second band grows in
    double rise_amplitude = 0.8;   // relative to the decaying band
    double noise = 0.01;           // sd relative to max|delta A|
    std::size_t n_wavelengths = 120;
    std::size_t n_delays = 160;
    double delay_max_ps = 5000.0;
};

/// Two-component transient-absorption matrix with orthogonal spectra: an
/// excited-state band decaying with tau_decay and a band that grows in as
/// 1 - exp(-t/tau_rise). Delays are quadratically spaced (dense at early times).
inline SpectrumMatrix rank2_tas(const Rank2TasSpec& s, std::uint64_t seed) {
    const auto wl = linspace(450.0, 950.0, s.n_wavelengths);
    std::vector<double> delays(s.n_delays);
    for (std::size_t j = 0; j < s.n_delays; ++j) {
        const double u = static_cast<double>(j) / static_cast<double>(s.n_delays - 1);
        delays[j] = s.delay_max_ps * u * u;
    }
    const auto nl = static_cast<Eigen::Index>(wl.size());
    Eigen::VectorXd s1(nl), s2(nl);
    for (Eigen::Index i = 0; i < nl; ++i) {
        const double l = wl[static_cast<std::size_t>(i)];
        s1(i) = std::exp(-0.5 * std::pow((l - 600.0) / 60.0, 2));
        s2(i) = -std::exp(-0.5 * std::pow((l - 780.0) / 80.0, 2));
    }
    s1.normalize();
    s2 -= s2.dot(s1) * s1;
    s2.normalize();

    Eigen::MatrixXd a(nl, static_cast<Eigen::Index>(delays.size()));
    for (std::size_t j = 0; j < delays.size(); ++j) {
        const double t = delays[j];
        a.col(static_cast<Eigen::Index>(j)) = std::exp(-t / s.tau_decay_ps) * s1 +
                                              s.rise_amplitude * (1.0 - std::exp(-t / s.tau_rise_ps)) * s2;
    }
    if (s.noise > 0.0) {
        const double peak = a.cwiseAbs().maxCoeff();
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) += s.noise * peak * nd(rng);
    }
    return {wl, delays, std::move(a)};
}

struct TcspcSpec {
    std::vector<double> lifetimes_ns{0.46, 3.7};
    std::vector<double> amplitudes{0.96, 0.04};
    double peak_counts = 2.0e4;
    double onset_ns = 2.0;
    double span_ns = 50.0;
    double bin_ns = 0.025;
    double background = 0.0;  // mean counts per bin
};

/// Poisson-sampled decay histogram (times in seconds, Counts); zero before onset.
inline TimeTrace tcspc(const TcspcSpec& s, std::uint64_t seed) {
    if (s.lifetimes_ns.size() != s.amplitudes.size() || s.lifetimes_ns.empty())
        throw InvalidInput("synthetic::tcspc: lifetimes and amplitudes differ in length");
    const auto n = static_cast<std::size_t>(std::floor(s.span_ns / s.bin_ns));
    double norm = 0.0;
    for (double a : s.amplitudes) norm += a;
    std::mt19937_64 rng(seed);
    std::vector<double> t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double tn = static_cast<double>(i) * s.bin_ns;
        t[i] = tn * 1e-9;
        double mean = s.background;
        if (tn >= s.onset_ns)
            for (std::size_t j = 0; j < s.amplitudes.size(); ++j)
                mean += s.peak_counts * s.amplitudes[j] / norm * std::exp(-(tn - s.onset_ns) / s.lifetimes_ns[j]);
        y[i] = mean > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(rng)) : 0.0;
    }
    return {std::move(t), std::move(y), Unit::Counts};
}

}  // namespace zfmaser::synthetic
