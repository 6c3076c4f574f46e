#pragma once

// Explicit embedded Runge-Kutta 5(4) integrator with the Dormand-Prince
// tableau, FSAL stage reuse, elementary step-size control and the quartic continuous
// extension used to sample the solution on an arbitrary output grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "zfmaser/error.hpp"

namespace zfmaser::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Tolerances {
    double rtol = 1e-8;
    double atol = 1e-12;
};

struct Options {
    Tolerances tol;
    double first_step = 0.0;  // 0 selects the step automatically
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 2'000'000;
};

template <std::size_t N>
struct Solution {
    std::vector<double> t;
    std::vector<State<N>> y;
    // Running sum of |local error estimate| up to each output time, per component.
    std::vector<State<N>> error_estimate;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t rhs_evaluations = 0;
};

namespace dp {

inline constexpr std::array<double, 6> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0};
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
// Fifth-order weights (also row 7 of A, hence FSAL).
inline constexpr std::array<double, 7> b{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                                         -2187.0 / 6784, 11.0 / 84, 0.0};
// b - b_hat, the embedded error estimator.
inline constexpr std::array<double, 7> e{-71.0 / 57600, 0.0, 71.0 / 16695, -71.0 / 1920,
                                         17253.0 / 339200, -22.0 / 525, 1.0 / 40};
// Continuous extension: y(t + th) = y + h sum_i k_i sum_j P[i][j] th^(j+1).
inline constexpr double P[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933,
     87487479700.0 / 32700410799},
    {0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408,
     701980252875.0 / 199316789632},
    {0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423}};

}  // namespace dp

/// Integrates y' = f(t, y) from t_out.front() to t_out.back() and returns the
/// solution sampled at every t_out point (dense output, independent of the
/// internal steps). f must have signature void(double t, const State<N>& y, State<N>& dy).
template <std::size_t N, class Rhs>
Solution<N> integrate(Rhs&& f, const State<N>& y0, std::span<const double> t_out,
                      const Options& opt = {}) {
    if (t_out.size() < 2) throw InvalidInput("integrate: need at least two output times");
    for (std::size_t i = 1; i < t_out.size(); ++i)
        if (!(t_out[i] > t_out[i - 1])) throw InvalidInput("integrate: output grid must increase");
    if (!(opt.tol.rtol > 0.0) || !(opt.tol.atol > 0.0))
        throw InvalidInput("integrate: tolerances must be positive");

    Solution<N> sol;
    sol.t.assign(t_out.begin(), t_out.end());
    sol.y.reserve(t_out.size());
    sol.error_estimate.reserve(t_out.size());

    const double t_end = t_out.back();
    double t = t_out.front();
    State<N> y = y0;
    State<N> err_sum{};
    std::array<State<N>, 7> k{};

    auto call = [&](double tt, const State<N>& yy, State<N>& out) {
        f(tt, yy, out);
        ++sol.rhs_evaluations;
        for (double v : out)
            if (!std::isfinite(v)) throw IntegrationFailure("integrate: non-finite derivative", t);
    };

    auto scaled_norm = [&](const State<N>& v, const State<N>& ya, const State<N>& yb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opt.tol.atol + opt.tol.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            acc += (v[i] / sc) * (v[i] / sc);
        }
        return std::sqrt(acc / static_cast<double>(N));
    };

    call(t, y, k[0]);
    sol.y.push_back(y);
    sol.error_estimate.push_back(err_sum);
    std::size_t next_out = 1;

    // Initial step (Hairer, Norsett & Wanner, II.4).
    double h = opt.first_step;
    if (h <= 0.0) {
        const double d0 = scaled_norm(y, y, y);
        const double d1 = scaled_norm(k[0], y, y);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t_end - t);
        State<N> y1{}, f1{};
        for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h0 * k[0][i];
        call(t + h0, y1, f1);
        State<N> df{};
        for (std::size_t i = 0; i < N; ++i) df[i] = f1[i] - k[0][i];
        const double d2 = scaled_norm(df, y, y) / h0;
        const double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                      : std::pow(0.01 / std::max(d1, d2), 0.2);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min({h, opt.max_step, t_end - t});

    constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0;
    State<N> ytmp{}, ynew{}, errv{};

    while (next_out < t_out.size()) {
        if (sol.accepted_steps + sol.rejected_steps >= opt.max_steps)
            throw IntegrationFailure("integrate: step budget exhausted", t);
        const double h_min = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < h_min) throw IntegrationFailure("integrate: step size underflow", t);
        if (t + h > t_end) h = t_end - t;

        using namespace dp;
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * a21 * k[0][i];
        call(t + c[1] * h, ytmp, k[1]);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a31 * k[0][i] + a32 * k[1][i]);
        call(t + c[2] * h, ytmp, k[2]);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
        call(t + c[3] * h, ytmp, k[3]);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]);
        call(t + c[4] * h, ytmp, k[4]);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] +
                                  a65 * k[4][i]);
        call(t + h, ytmp, k[5]);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (b[0] * k[0][i] + b[2] * k[2][i] + b[3] * k[3][i] +
                                  b[4] * k[4][i] + b[5] * k[5][i]);
        const double t_new = (t + h >= t_end) ? t_end : t + h;
        call(t_new, ynew, k[6]);
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 7; ++j) s += e[j] * k[j][i];
            errv[i] = h * s;
        }
        const double err = scaled_norm(errv, y, ynew);

        if (err <= 1.0) {
            // Sample the continuous extension at every output time in (t, t_new].
            while (next_out < t_out.size() && t_out[next_out] <= t_new) {
                const double th = (t_out[next_out] - t) / h;
                State<N> yo{};
                for (std::size_t i = 0; i < N; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < 7; ++j) {
                        const double q = P[j][0] + th * (P[j][1] + th * (P[j][2] + th * P[j][3]));
                        acc += k[j][i] * q;
                    }
                    yo[i] = y[i] + h * th * acc;
                }
                if (t_out[next_out] == t_new) yo = ynew;
                State<N> es{};
                for (std::size_t i = 0; i < N; ++i) es[i] = err_sum[i] + std::abs(errv[i]);
                sol.y.push_back(yo);
                sol.error_estimate.push_back(es);
                ++next_out;
            }
            for (std::size_t i = 0; i < N; ++i) err_sum[i] += std::abs(errv[i]);
            t = t_new;
            y = ynew;
            k[0] = k[6];
            ++sol.accepted_steps;
            const double factor =
                err == 0.0 ? max_factor : std::min(max_factor, safety * std::pow(err, -0.2));
            h = std::min(h * factor, opt.max_step);
        } else {
            ++sol.rejected_steps;
            h *= std::max(min_factor, safety * std::pow(err, -0.2));
        }
    }
    return sol;
}

}  // namespace zfmaser::ode
