#pragma once

// Mean-field Tavis-Cummings maser dynamics. Four expectation values are
// evolved: the cavity photon number <a^dag a>, the spin-photon coherence
// <S+ a>, the normalized inversion <Sz> and the spin-spin correlation <S+ S->.
//
//   d<a^dag a>/dt = -kc <a^dag a> + kc nbar - 2 g Im<S+ a>
//   d<S+ a>/dt    = -(kc + gamma + ks + 2i delta)/2 <S+ a>
//                   - i g ((<Sz> + 1)/2 + (1 - 1/N) <S+S-> + <a^dag a><Sz>)
//   d<Sz>/dt      = -gamma <Sz> + (4 g / N) Im<S+ a>
//   d<S+S->/dt    = -(gamma + ks) <S+S-> - 2 g <Sz> Im<S+ a>
//
// The i g (X - X*) terms have been written as -2 g Im X so the photon number,
// inversion and correlation stay real by construction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "zfmaser/error.hpp"
#include "zfmaser/ode.hpp"
#include "zfmaser/units.hpp"

namespace zfmaser {

struct MaserSystemParams {
    double g_e = 0.0;      // ensemble spin-photon coupling, s^-1 (angular)
    double kappa_c = 0.0;  // cavity decay rate, s^-1
    double kappa_s = 0.0;  // spin dephasing rate, s^-1 (angular)
    double gamma = 0.0;    // spin-lattice relaxation rate, s^-1
    double delta = 0.0;    // detuning, s^-1 (angular)
    double n_spins = 1.0;
    double n_bar = 0.0;

    void validate() const {
        for (double v : {g_e, kappa_c, kappa_s, gamma, n_bar})
            if (!(v >= 0.0) || !std::isfinite(v))
                throw InvalidInput("MaserSystemParams: rates and n_bar must be finite and >= 0");
        if (!std::isfinite(delta)) throw InvalidInput("MaserSystemParams: detuning must be finite");
        if (!(n_spins >= 1.0) || !std::isfinite(n_spins))
            throw InvalidInput("MaserSystemParams: n_spins must be >= 1");
    }

    /// Parameters fitted to the DAP:PTP burst: g_e = 2pi x 2.3 MHz,
    /// kappa_s = 2pi x 0.29 MHz, N = 9.7e14, gamma = 0.2e6 s^-1, n_bar = 4097,
    /// kappa_c = 2pi x 1478 MHz / 3690.
    static MaserSystemParams reference() {
        MaserSystemParams p;
        p.g_e = ordinary_to_angular(2.3e6);
        p.kappa_s = ordinary_to_angular(0.29e6);
        p.kappa_c = 2.517e6;
        p.gamma = 0.2e6;
        p.delta = 0.0;
        p.n_spins = 9.7e14;
        p.n_bar = 4097.0;
        return p;
    }
};

struct MaserState {
    double photon_number = 0.0;
    std::complex<double> coherence{0.0, 0.0};
    double inversion = 0.0;
    double spin_correlation = 0.0;  // <S+S->, not divided by N

    /// t = 0 state of the burst: thermal cavity, inverted spins, no correlations.
    static MaserState initial(double n_bar, double inversion0 = 0.52) {
        return {n_bar, {0.0, 0.0}, inversion0, 0.0};
    }
};

/// Right-hand side of the four mean-field equations, in natural units.
inline MaserState maser_rhs(const MaserState& s, const MaserSystemParams& p) {
    const double im_x = s.coherence.imag();
    const double n = p.n_spins;
    MaserState d;
    d.photon_number = -p.kappa_c * s.photon_number + p.kappa_c * p.n_bar - 2.0 * p.g_e * im_x;
    const std::complex<double> damping(0.5 * (p.kappa_c + p.gamma + p.kappa_s), p.delta);
    const double source = 0.5 * (s.inversion + 1.0) + (1.0 - 1.0 / n) * s.spin_correlation +
                          s.photon_number * s.inversion;
    d.coherence = -damping * s.coherence - std::complex<double>(0.0, p.g_e * source);
    d.inversion = -p.gamma * s.inversion + 4.0 * p.g_e / n * im_x;
    d.spin_correlation = -(p.gamma + p.kappa_s) * s.spin_correlation - 2.0 * p.g_e * s.inversion * im_x;
    return d;
}

inline double cooperativity(double g_e, double kappa_c, double kappa_s) {
    if (!(kappa_c > 0.0) || !(kappa_s > 0.0))
        throw InvalidInput("cooperativity: kappa_c and kappa_s must be positive");
    return 4.0 * g_e * g_e / (kappa_c * kappa_s);
}

/// Vacuum Rabi splitting expected from the ensemble coupling, Omega = 2 g_e.
inline constexpr double predicted_rabi(double g_e) { return 2.0 * g_e; }

namespace detail {

// Integrated state: photon number / N, coherence / N (re, im), inversion,
// correlation / N. Keeps every component O(1) for the error control.
using ScaledMaserState = ode::State<5>;

inline ScaledMaserState to_scaled(const MaserState& s, double n) {
    return {s.photon_number / n, s.coherence.real() / n, s.coherence.imag() / n, s.inversion,
            s.spin_correlation / n};
}

inline MaserState from_scaled(const ScaledMaserState& y, double n) {
    return {y[0] * n, {y[1] * n, y[2] * n}, y[3], y[4] * n};
}

inline void scaled_rhs(const ScaledMaserState& y, const MaserSystemParams& p, ScaledMaserState& dy) {
    const double g = p.g_e, n = p.n_spins;
    const double p_ph = y[0], xr = y[1], xi = y[2], sz = y[3], sc = y[4];
    dy[0] = -p.kappa_c * (p_ph - p.n_bar / n) - 2.0 * g * xi;
    const double half = 0.5 * (p.kappa_c + p.gamma + p.kappa_s);
    const double source = 0.5 * (sz + 1.0) / n + (1.0 - 1.0 / n) * sc + p_ph * sz;
    // -(half + i delta)(xr + i xi) - i g source
    dy[1] = -half * xr + p.delta * xi;
    dy[2] = -half * xi - p.delta * xr - g * source;
    dy[3] = -p.gamma * sz + 4.0 * g * xi;
    dy[4] = -(p.gamma + p.kappa_s) * sc - 2.0 * g * sz * xi;
}

}  // namespace detail

struct MaserSimOptions {
    // atol applies to the scaled state, so it is an absolute photon tolerance of
    // atol * N. 1e-20 keeps the thermal floor (n_bar ~ 1e3-1e4 at N ~ 1e15) resolved.
    ode::Tolerances tol{1e-8, 1e-20};
    std::size_t n_points = 2000;
    std::size_t max_steps = 2'000'000;
    // Re-solve at tol / companion_factor and add |coarse - fine| to the error
    // estimate. Without it the estimate is the summed local error only, which
    // misses the amplification through the unstable onset of the burst.
    bool companion_run = true;
    double companion_factor = 16.0;
};

struct MaserTrajectory {
    std::vector<double> t;
    std::vector<MaserState> states;
    std::vector<double> error_estimate;  // max over scaled components
    double n_spins = 1.0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    std::vector<double> photon_numbers() const {
        std::vector<double> out(states.size());
        std::transform(states.begin(), states.end(), out.begin(),
                       [](const MaserState& s) { return s.photon_number; });
        return out;
    }

    TimeTrace photon_trace() const { return TimeTrace(t, photon_numbers(), Unit::Photons); }

    /// <a^dag a> + (N/2) <Sz>, conserved when every loss channel is off.
    std::vector<double> excitation_number() const {
        std::vector<double> out(states.size());
        for (std::size_t i = 0; i < states.size(); ++i)
            out[i] = states[i].photon_number + 0.5 * n_spins * states[i].inversion;
        return out;
    }
};

/// Integrates the mean-field equations and samples them on t_grid (seconds).
inline MaserTrajectory simulate_maser(const MaserSystemParams& params, const MaserState& init,
                                      std::span<const double> t_grid,
                                      const MaserSimOptions& opt = {}) {
    params.validate();
    if (t_grid.size() < 2 || !(t_grid.front() < t_grid.back()))
        throw InvalidInput("simulate_maser: need an increasing time span");
    ode::Options o;
    o.tol = opt.tol;
    o.max_steps = opt.max_steps;
    auto rhs = [&params](double, const detail::ScaledMaserState& y, detail::ScaledMaserState& dy) {
        detail::scaled_rhs(y, params, dy);
    };
    const auto y0 = detail::to_scaled(init, params.n_spins);
    const auto sol = ode::integrate<5>(rhs, y0, t_grid, o);
    std::vector<detail::ScaledMaserState> fine;
    if (opt.companion_run) {
        if (!(opt.companion_factor > 1.0)) throw InvalidInput("simulate_maser: companion_factor must exceed 1");
        ode::Options of = o;
        of.tol.rtol /= opt.companion_factor;
        of.tol.atol /= opt.companion_factor;
        fine = ode::integrate<5>(rhs, y0, t_grid, of).y;
    }
    MaserTrajectory tr;
    tr.t = sol.t;
    tr.n_spins = params.n_spins;
    tr.accepted_steps = sol.accepted_steps;
    tr.rejected_steps = sol.rejected_steps;
    tr.states.reserve(sol.y.size());
    tr.error_estimate.reserve(sol.y.size());
    for (std::size_t i = 0; i < sol.y.size(); ++i) {
        tr.states.push_back(detail::from_scaled(sol.y[i], params.n_spins));
        double e = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            // rounding floor: a few ulps of the stored value
            double ej = sol.error_estimate[i][j] + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(sol.y[i][j]);
            if (!fine.empty()) ej += std::abs(sol.y[i][j] - fine[i][j]);
            e = std::max(e, ej);
        }
        tr.error_estimate.push_back(e);
    }
    return tr;
}

/// Uniform-grid overload over [t0, t1] with opt.n_points samples.
inline MaserTrajectory simulate_maser(const MaserSystemParams& params, const MaserState& init,
                                      double t0, double t1, const MaserSimOptions& opt = {}) {
    if (!(t0 < t1)) throw InvalidInput("simulate_maser: t_span must satisfy t0 < t1");
    if (opt.n_points < 2) throw InvalidInput("simulate_maser: need at least two output points");
    const auto grid = linspace(t0, t1, opt.n_points);
    return simulate_maser(params, init, grid, opt);
}

struct RabiEstimate {
    double frequency;       // Hz, ordinary
    double peak_magnitude;
    double floor_magnitude;  // median of the searched band
};

/// Dominant non-DC line of the mean-removed, Hann-windowed segment of `trace`
/// inside [t_start, t_end], refined by a parabola through the peak bin and its
/// neighbours. Assumes (near-)uniform sampling in the window.
inline RabiEstimate extract_rabi_frequency(const TimeTrace& trace, double t_start, double t_end) {
    trace.require(Unit::Photons, "extract_rabi_frequency");
    std::vector<double> seg, ts;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (trace.t()[i] >= t_start && trace.t()[i] <= t_end) {
            seg.push_back(trace.y()[i]);
            ts.push_back(trace.t()[i]);
        }
    }
    const std::size_t n = seg.size();
    if (n < 16) throw InvalidInput("extract_rabi_frequency: burst window holds fewer than 16 samples");
    const double dt = (ts.back() - ts.front()) / static_cast<double>(n - 1);
    const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n - 1)));
        seg[i] = (seg[i] - mean) * w;
        scale = std::max(scale, std::abs(seg[i]));
    }

    // Zero-padded DFT magnitudes; bins below the Hann main-lobe width of DC are skipped.
    constexpr std::size_t pad = 4;
    const std::size_t m = pad * n;
    const std::size_t k_first = 2 * pad + 1;
    const std::size_t k_last = m / 2;
    if (k_last <= k_first + 2) throw InvalidInput("extract_rabi_frequency: window too short");
    std::vector<double> mag(k_last + 1, 0.0);
    for (std::size_t k = k_first - 1; k <= k_last; ++k) {
        const double w = two_pi * static_cast<double>(k) / static_cast<double>(m);
        // direct sum, rotating phasor
        std::complex<double> acc(0.0, 0.0), ph(1.0, 0.0);
        const std::complex<double> step(std::cos(w), -std::sin(w));
        for (std::size_t i = 0; i < n; ++i) {
            acc += seg[i] * ph;
            ph *= step;
        }
        mag[k] = std::abs(acc);
    }
    std::size_t best = 0;
    for (std::size_t k = k_first; k < k_last; ++k)
        if (mag[k] >= mag[k - 1] && mag[k] >= mag[k + 1] && (best == 0 || mag[k] > mag[best])) best = k;
    std::vector<double> band(mag.begin() + static_cast<std::ptrdiff_t>(k_first),
                             mag.begin() + static_cast<std::ptrdiff_t>(k_last) + 1);
    std::nth_element(band.begin(), band.begin() + static_cast<std::ptrdiff_t>(band.size() / 2), band.end());
    const double floor_mag = band[band.size() / 2];
    if (best == 0 || !(mag[best] > 3.0 * floor_mag) || !(mag[best] > 1e-12 * scale * static_cast<double>(n)) ||
        scale == 0.0)
        throw NoOscillation("extract_rabi_frequency: no spectral peak above 3x the median floor");
    const double a = mag[best - 1], b = mag[best], c = mag[best + 1];
    const double denom = a - 2.0 * b + c;
    const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    const double freq = (static_cast<double>(best) + shift) / (static_cast<double>(m) * dt);
    return {freq, b, floor_mag};
}

}  // namespace zfmaser
