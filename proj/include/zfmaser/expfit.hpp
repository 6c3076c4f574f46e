#pragma once

// Sums of decaying exponentials sharing their rates across one or more
// profiles:  y_p(t) = sum_j a_pj exp(-r_j t) [+ c_p].
// Starting rates come from a log-spaced grid search with the amplitudes
// eliminated by linear least squares; the full problem is then polished by
// Levenberg-Marquardt with an analytic Jacobian.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zfmaser/error.hpp"
#include "zfmaser/nlls.hpp"

namespace zfmaser::fit {

inline constexpr std::size_t max_grid_components = 4;

struct ExpSumSpec {
    std::size_t components = 1;
    bool offset = false;
    double rate_min = 0.0;  // search band for the rates, s^-1 (or 1/time unit)
    double rate_max = 0.0;
    std::size_t grid_points = 40;
    std::vector<double> weights;           // per sample, shared by every profile
    std::optional<std::vector<double>> init_rates;
};

struct ExpSumFit {
    std::vector<double> rates;                     // ascending
    std::vector<double> rate_uncertainties;
    std::vector<std::vector<double>> amplitudes;   // [profile][component]
    std::vector<std::vector<double>> amplitude_uncertainties;
    std::vector<double> offsets;                   // [profile], zero when not fitted
    FitResult result;

    double evaluate(std::size_t profile, double t) const {
        double v = offsets.empty() ? 0.0 : offsets[profile];
        for (std::size_t j = 0; j < rates.size(); ++j) v += amplitudes[profile][j] * std::exp(-rates[j] * t);
        return v;
    }
};

namespace detail {

inline Eigen::MatrixXd exp_basis(std::span<const double> t, std::span<const double> rates, bool offset) {
    const auto n = static_cast<Eigen::Index>(t.size());
    const auto k = static_cast<Eigen::Index>(rates.size());
    Eigen::MatrixXd B(n, k + (offset ? 1 : 0));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j)
            B(i, j) = std::exp(-rates[static_cast<std::size_t>(j)] * t[static_cast<std::size_t>(i)]);
        if (offset) B(i, k) = 1.0;
    }
    return B;
}

// Best rate tuple on a log grid, amplitudes projected out. Returns ascending rates.
inline std::vector<double> grid_search_rates(std::span<const double> t, const Eigen::MatrixXd& Y,
                                             const ExpSumSpec& spec, const Eigen::VectorXd& w) {
    const std::size_t k = spec.components;
    const std::size_t G = std::max<std::size_t>(spec.grid_points, k + 1);
    std::vector<double> grid(G);
    for (std::size_t i = 0; i < G; ++i)
        grid[i] = spec.rate_min * std::pow(spec.rate_max / spec.rate_min,
                                           static_cast<double>(i) / static_cast<double>(G - 1));
    // Precompute the weighted columns once.
    const auto n = static_cast<Eigen::Index>(t.size());
    std::vector<Eigen::VectorXd> cols(G);
    for (std::size_t g = 0; g < G; ++g) {
        cols[g].resize(n);
        for (Eigen::Index i = 0; i < n; ++i) cols[g](i) = w(i) * std::exp(-grid[g] * t[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd WY = w.asDiagonal() * Y;

    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::size_t> best_idx = idx;
    double best = std::numeric_limits<double>::infinity();
    const Eigen::Index nb = static_cast<Eigen::Index>(k + (spec.offset ? 1 : 0));
    Eigen::MatrixXd B(n, nb);
    while (true) {
        for (std::size_t j = 0; j < k; ++j) B.col(static_cast<Eigen::Index>(j)) = cols[idx[j]];
        if (spec.offset) B.col(nb - 1) = w;
        const auto qr = B.colPivHouseholderQr();
        const Eigen::MatrixXd coef = qr.solve(WY);
        const double ssr = (B * coef - WY).squaredNorm();
        if (qr.rank() == nb && ssr < best) {
            best = ssr;
            best_idx = idx;
        }
        // next combination (k of G, ascending)
        std::size_t pos = k;
        while (pos > 0 && idx[pos - 1] == G - k + pos - 1) --pos;
        if (pos == 0) break;
        ++idx[pos - 1];
        for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    std::vector<double> rates(k);
    for (std::size_t j = 0; j < k; ++j) rates[j] = grid[best_idx[j]];
    return rates;
}

}  // namespace detail

/// Fits `profiles` (each sampled on t) with shared decay rates. Rates are
/// bounded to [rate_min/100, rate_max*100] and returned in ascending order.
inline ExpSumFit fit_exp_sum(std::span<const double> t, const std::vector<std::vector<double>>& profiles,
                             const ExpSumSpec& spec, const FitOptions& opt = {}) {
    const std::size_t k = spec.components, P = profiles.size(), n = t.size();
    if (k == 0) throw InvalidInput("fit_exp_sum: need at least one component");
    if (P == 0) throw InvalidInput("fit_exp_sum: no profiles");
    if (!(spec.rate_min > 0.0) || !(spec.rate_max > spec.rate_min))
        throw InvalidInput("fit_exp_sum: invalid rate search band");
    for (const auto& p : profiles)
        if (p.size() != n) throw InvalidInput("fit_exp_sum: profile length mismatch");
    const std::size_t per = k + (spec.offset ? 1 : 0);
    if (n * P <= k + P * per) throw InvalidInput("fit_exp_sum: not enough samples for the model");
    // The grid search visits every k-subset of the grid.
    if (!spec.init_rates && k > max_grid_components)
        throw InvalidInput("fit_exp_sum: more than " + std::to_string(max_grid_components) +
                           " components need init_rates");

    Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    if (!spec.weights.empty()) {
        if (spec.weights.size() != n) throw InvalidInput("fit_exp_sum: weights size mismatch");
        for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i)) = spec.weights[i];
    }
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(P));
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t i = 0; i < n; ++i) Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = profiles[p][i];

    std::vector<double> rates0 = spec.init_rates ? *spec.init_rates : detail::grid_search_rates(t, Y, spec, w);
    if (rates0.size() != k) throw InvalidInput("fit_exp_sum: init_rates has the wrong length");
    std::sort(rates0.begin(), rates0.end());

    // Linear amplitudes for the starting rates.
    const Eigen::MatrixXd B0 = detail::exp_basis(t, rates0, spec.offset);
    const Eigen::MatrixXd coef0 = (w.asDiagonal() * B0).colPivHouseholderQr().solve(w.asDiagonal() * Y);

    // Parameter layout: rates[k], then per profile: amplitudes[k], offset?
    FitProblem prob;
    const std::size_t np = k + P * per;
    prob.init.resize(np);
    prob.lower.assign(np, -std::numeric_limits<double>::infinity());
    prob.upper.assign(np, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < k; ++j) {
        prob.lower[j] = spec.rate_min / 100.0;
        prob.upper[j] = spec.rate_max * 100.0;
        prob.init[j] = std::clamp(rates0[j], prob.lower[j], prob.upper[j]);
    }
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t c = 0; c < per; ++c)
            prob.init[k + p * per + c] = coef0(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p));
    prob.data.reserve(n * P);
    for (std::size_t p = 0; p < P; ++p) prob.data.insert(prob.data.end(), profiles[p].begin(), profiles[p].end());
    if (!spec.weights.empty())
        for (std::size_t p = 0; p < P; ++p) prob.weights.insert(prob.weights.end(), spec.weights.begin(), spec.weights.end());

    const std::vector<double> tv(t.begin(), t.end());
    const bool off = spec.offset;
    prob.model = [tv, k, P, per, off](std::span<const double> x) {
        const std::size_t n = tv.size();
        std::vector<double> y(n * P);
        std::vector<double> e(k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) e[j] = std::exp(-x[j] * tv[i]);
            for (std::size_t p = 0; p < P; ++p) {
                const double* a = &x[k + p * per];
                double v = off ? a[k] : 0.0;
                for (std::size_t j = 0; j < k; ++j) v += a[j] * e[j];
                y[p * n + i] = v;
            }
        }
        return y;
    };
    prob.jacobian = [tv, k, P, per, off, np](std::span<const double> x) {
        const std::size_t n = tv.size();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n * P), static_cast<Eigen::Index>(np));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                const double e = std::exp(-x[j] * tv[i]);
                for (std::size_t p = 0; p < P; ++p) {
                    const auto row = static_cast<Eigen::Index>(p * n + i);
                    const std::size_t base = k + p * per;
                    J(row, static_cast<Eigen::Index>(j)) = -x[base + j] * tv[i] * e;
                    J(row, static_cast<Eigen::Index>(base + j)) = e;
                }
            }
            if (off)
                for (std::size_t p = 0; p < P; ++p)
                    J(static_cast<Eigen::Index>(p * n + i), static_cast<Eigen::Index>(k + p * per + k)) = 1.0;
        }
        return J;
    };

    FitResult res = nlls_minimize(prob, opt);

    // Sort components by rate.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return res.params[a] < res.params[b]; });
    ExpSumFit out;
    out.rates.resize(k);
    out.rate_uncertainties.resize(k);
    out.amplitudes.assign(P, std::vector<double>(k));
    out.amplitude_uncertainties.assign(P, std::vector<double>(k));
    out.offsets.assign(P, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        out.rates[j] = res.params[order[j]];
        out.rate_uncertainties[j] = res.param_uncertainties[order[j]];
        for (std::size_t p = 0; p < P; ++p) {
            out.amplitudes[p][j] = res.params[k + p * per + order[j]];
            out.amplitude_uncertainties[p][j] = res.param_uncertainties[k + p * per + order[j]];
        }
    }
    if (off)
        for (std::size_t p = 0; p < P; ++p) out.offsets[p] = res.params[k + p * per + k];
    out.result = std::move(res);
    return out;
}

/// Default rate search band for a trace sampled on t: from a tenth of the
/// inverse span to the inverse of the smallest sampling interval.
inline std::pair<double, double> default_rate_band(std::span<const double> t) {
    if (t.size() < 2) throw InvalidInput("default_rate_band: need at least two samples");
    const double span = t.back() - t.front();
    double dt_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < t.size(); ++i) dt_min = std::min(dt_min, t[i] - t[i - 1]);
    return {0.1 / span, 1.0 / dt_min};
}

}  // namespace zfmaser::fit
