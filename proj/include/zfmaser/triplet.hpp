#pragma once

// Two-sublevel (T_x, T_z) population kinetics with symmetric spin-lattice
// exchange w_xz and depopulation rates k_x, k_z:
//
//   d/dt [Nx]   [-w-kx    w  ] [Nx]
//        [Nz] = [  w    -w-kz] [Nz]
//
// T_y is carried only for the normalization check.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "zfmaser/error.hpp"
#include "zfmaser/units.hpp"

namespace zfmaser {

struct TripletRateModel {
    double n_x0 = 0.6;
    double n_y0 = 0.21;
    double n_z0 = 0.19;
    double k_x = 0.0;
    double k_z = 0.0;
    double w_xz = 0.0;

    void validate() const {
        const double sum = n_x0 + n_y0 + n_z0;
        if (!(std::abs(sum - 1.0) <= 1e-9))
            throw InvalidInput("TripletRateModel: initial populations must sum to 1");
        if (!(n_x0 >= 0.0 && n_y0 >= 0.0 && n_z0 >= 0.0))
            throw InvalidInput("TripletRateModel: populations must be non-negative");
        if (!(k_x >= 0.0 && k_z >= 0.0 && w_xz >= 0.0) || !std::isfinite(k_x) ||
            !std::isfinite(k_z) || !std::isfinite(w_xz))
            throw InvalidInput("TripletRateModel: rates must be finite and non-negative");
    }

    /// Rate matrix in row-major order.
    std::array<double, 4> rate_matrix() const {
        return {-w_xz - k_x, w_xz, w_xz, -w_xz - k_z};
    }
};

/// Biexponential form of the trEPR signal N_x - N_z = A e^(a_- t) + B e^(a_+ t).
struct BiexpFit {
    double A = 0.0;
    double B = 0.0;
    double alpha_minus = 0.0;
    double alpha_plus = 0.0;
    std::array<double, 4> uncertainties{};  // A, B, alpha_minus, alpha_plus
    double residual_norm = 0.0;
    bool converged = true;
    int components_supported = 2;
};

struct EigenRates {
    double alpha_minus;
    double alpha_plus;
};

/// Eigenvalues of the rate matrix, alpha_minus <= alpha_plus <= 0.
inline EigenRates eigenrates(const TripletRateModel& m) {
    m.validate();
    const double k_avg = 0.5 * (m.k_x + m.k_z);
    const double dk = 0.5 * (m.k_x - m.k_z);
    const double minus = -(m.w_xz + k_avg) - std::hypot(m.w_xz, dk);
    // alpha_plus via the determinant avoids cancellation when the split is small.
    const double det = m.w_xz * (m.k_x + m.k_z) + m.k_x * m.k_z;
    const double plus = minus != 0.0 ? det / minus : 0.0;
    return {minus, plus};
}

struct CombinedDecay {
    double rate;        // w_xz + (k_x + k_z)/2, s^-1
    double decay_time;  // seconds
};

inline CombinedDecay combined_rate_from_eigen(double alpha_minus, double alpha_plus) {
    if (!(alpha_minus < 0.0) || !(alpha_plus < 0.0))
        throw InvalidInput("combined_rate_from_eigen: both eigen-rates must be negative");
    const double rate = -0.5 * (alpha_minus + alpha_plus);
    return {rate, 1.0 / rate};
}

struct TripletTrajectory {
    std::vector<double> t;
    std::vector<double> n_x;
    std::vector<double> n_z;

    std::vector<double> difference() const {
        std::vector<double> d(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) d[i] = n_x[i] - n_z[i];
        return d;
    }
};

namespace detail {

// sinh(x)/x, accurate near zero.
inline double sinhc(double x) {
    if (std::abs(x) < 1e-4) return 1.0 + x * x / 6.0;
    return std::sinh(x) / x;
}

// exp(M t) of the 2x2 rate matrix, row-major, entries clamped at zero
// (the matrix is Metzler, so the exact propagator is non-negative).
inline std::array<double, 4> propagator(const TripletRateModel& m, double t) {
    const double mean = -(m.w_xz + 0.5 * (m.k_x + m.k_z));
    const double dk = 0.5 * (m.k_x - m.k_z);
    const double split = std::hypot(m.w_xz, dk);
    const double alpha_minus = mean - split;
    std::array<double, 4> P{};
    if (2.0 * split >= 1e-6 * std::abs(alpha_minus) && split > 0.0) {
        const double e_plus = std::exp((mean + split) * t);
        const double e_minus = std::exp((mean - split) * t);
        const double c = dk / split;
        const double off = m.w_xz / split;
        P[0] = 0.5 * ((1.0 - c) * e_plus + (1.0 + c) * e_minus);
        P[3] = 0.5 * ((1.0 + c) * e_plus + (1.0 - c) * e_minus);
        P[1] = P[2] = 0.5 * off * (e_plus - e_minus);
    } else {
        // Confluent limit: e^(mean t) [cosh(st) I + t sinhc(st) (M - mean I)].
        const double e = std::exp(mean * t);
        const double ch = std::cosh(split * t);
        const double ts = t * sinhc(split * t);
        P[0] = e * (ch - dk * ts);
        P[3] = e * (ch + dk * ts);
        P[1] = P[2] = e * m.w_xz * ts;
    }
    for (double& v : P) v = std::max(v, 0.0);
    return P;
}

}  // namespace detail

inline TripletTrajectory evolve_populations(const TripletRateModel& m,
                                            std::span<const double> t_grid) {
    m.validate();
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!std::isfinite(t_grid[i]) || (i == 0 && t_grid[i] < 0.0) ||
            (i > 0 && !(t_grid[i] > t_grid[i - 1])))
            throw InvalidInput("evolve_populations: time grid must be increasing and start at t >= 0");
    }
    TripletTrajectory out;
    out.t.assign(t_grid.begin(), t_grid.end());
    out.n_x.resize(t_grid.size());
    out.n_z.resize(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const auto P = detail::propagator(m, t_grid[i]);
        out.n_x[i] = P[0] * m.n_x0 + P[1] * m.n_z0;
        out.n_z[i] = P[2] * m.n_x0 + P[3] * m.n_z0;
    }
    return out;
}

/// Projection of (N_x0 - N_z0) onto the two eigenmodes: the amplitudes (A, B)
/// of the biexponential difference signal generated by a rate model.
inline BiexpFit biexp_from_model(const TripletRateModel& m) {
    m.validate();
    const auto rates = eigenrates(m);
    const double dk = 0.5 * (m.k_x - m.k_z);
    const double split = std::hypot(m.w_xz, dk);
    BiexpFit f;
    f.alpha_minus = rates.alpha_minus;
    f.alpha_plus = rates.alpha_plus;
    const double d0 = m.n_x0 - m.n_z0;
    if (split == 0.0) {
        f.A = d0;
        f.B = 0.0;
        return f;
    }
    // d(t) = (1,-1) exp(Mt) N0; collect the e^(alpha_+) and e^(alpha_-) parts.
    const double c = dk / split;
    const double off = m.w_xz / split;
    const double nx = m.n_x0, nz = m.n_z0;
    const double coef_plus = 0.5 * ((1.0 - c) * nx + off * nz - off * nx - (1.0 + c) * nz);
    const double coef_minus = 0.5 * ((1.0 + c) * nx - off * nz + off * nx - (1.0 - c) * nz);
    f.A = coef_minus;
    f.B = coef_plus;
    return f;
}

inline double biexp_value(const BiexpFit& f, double t) {
    return f.A * std::exp(f.alpha_minus * t) + f.B * std::exp(f.alpha_plus * t);
}

inline TimeTrace predicted_trepr_signal(const BiexpFit& f, std::span<const double> t_grid) {
    std::vector<double> y(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) y[i] = biexp_value(f, t_grid[i]);
    return TimeTrace(std::vector<double>(t_grid.begin(), t_grid.end()), std::move(y),
                     Unit::Dimensionless);
}

/// Time at which the emissive and absorptive components cancel, or NaN if the
/// amplitudes share a sign (no crossing) or the rates coincide.
inline double trepr_zero_crossing(const BiexpFit& f) {
    if (f.A == 0.0 || f.B == 0.0 || (f.A > 0.0) == (f.B > 0.0) ||
        f.alpha_minus == f.alpha_plus)
        return std::numeric_limits<double>::quiet_NaN();
    const double t = std::log(-f.B / f.A) / (f.alpha_minus - f.alpha_plus);
    return t >= 0.0 ? t : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace zfmaser
