#pragma once

// Fits (g_e, kappa_s, N) of the mean-field maser model to a measured,
// baseline-corrected photon-number trace. The optimizer works on log10 of the
// three parameters: that keeps them positive and puts N ~ 1e15 on the same
// footing as rates ~ 1e6.

#include <algorithm>
#include <cmath>
#include <vector>

#include "zfmaser/cqed.hpp"
#include "zfmaser/nlls.hpp"

namespace zfmaser {

struct MaserFitFixed {
    double kappa_c = 0.0;
    double gamma = 0.0;
    double n_bar = 0.0;
    double inversion0 = 0.52;
    double delta = 0.0;
};

struct MaserFitInit {
    double g_e;
    double kappa_s;
    double n_spins;
};

struct MaserFitResult {
    MaserSystemParams params;
    std::array<double, 3> uncertainties{};      // g_e, kappa_s, n_spins (natural units)
    std::array<double, 3> log10_uncertainties{};
    double cooperativity = 0.0;
    fit::FitResult fit;
};

struct MaserFitOptions {
    fit::LossSpace loss_space = fit::LossSpace::Log10;
    double search_decades = 2.0;  // box half-width around the start, in decades
    MaserSimOptions sim{.companion_run = false};
    fit::FitOptions fit;
};

/// Photon numbers predicted on the data grid; the trajectory always starts at t = 0.
inline std::vector<double> maser_model_on_grid(const MaserSystemParams& p, double inversion0,
                                               std::span<const double> t, const MaserSimOptions& sim) {
    std::vector<double> grid;
    const bool prepend = t.front() > 0.0;
    if (prepend) grid.push_back(0.0);
    grid.insert(grid.end(), t.begin(), t.end());
    const auto tr = simulate_maser(p, MaserState::initial(p.n_bar, inversion0), grid, sim);
    auto y = tr.photon_numbers();
    if (prepend) y.erase(y.begin());
    return y;
}

inline MaserFitResult fit_maser_parameters(const TimeTrace& photon_trace, const MaserFitFixed& fixed,
                                           const MaserFitInit& init, const MaserFitOptions& opt = {}) {
    photon_trace.require(Unit::Photons, "fit_maser_parameters");
    if (photon_trace.size() < 4) throw InvalidInput("fit_maser_parameters: trace too short");
    if (photon_trace.t()[0] < 0.0) throw InvalidInput("fit_maser_parameters: trace must start at t >= 0");
    if (!(fixed.kappa_c > 0.0) || !(fixed.gamma >= 0.0) || !(fixed.n_bar >= 0.0))
        throw InvalidInput("fit_maser_parameters: fixed parameters must be positive");
    if (!(init.g_e > 0.0) || !(init.kappa_s > 0.0) || !(init.n_spins >= 1.0))
        throw InvalidInput("fit_maser_parameters: starting values must be positive");

    const std::vector<double> t(photon_trace.t().begin(), photon_trace.t().end());
    auto make_params = [fixed](std::span<const double> x) {
        MaserSystemParams p;
        p.g_e = std::pow(10.0, x[0]);
        p.kappa_s = std::pow(10.0, x[1]);
        p.n_spins = std::pow(10.0, x[2]);
        p.kappa_c = fixed.kappa_c;
        p.gamma = fixed.gamma;
        p.delta = fixed.delta;
        p.n_bar = fixed.n_bar;
        return p;
    };

    fit::FitProblem prob;
    prob.data.assign(photon_trace.y().begin(), photon_trace.y().end());
    prob.loss_space = opt.loss_space;
    prob.init = {std::log10(init.g_e), std::log10(init.kappa_s), std::log10(init.n_spins)};
    for (double v : prob.init) {
        prob.lower.push_back(v - opt.search_decades);
        prob.upper.push_back(v + opt.search_decades);
    }
    prob.lower[2] = std::max(prob.lower[2], 0.0);
    const double inv0 = fixed.inversion0;
    const MaserSimOptions sim = opt.sim;
    prob.model = [t, make_params, inv0, sim](std::span<const double> x) {
        try {
            return maser_model_on_grid(make_params(x), inv0, t, sim);
        } catch (const IntegrationFailure&) {
            // A failed trial is penalized, not fatal.
            return std::vector<double>(t.size(), 1e30);
        }
    };

    // Continuation over the data window: the build-up to the first maximum is
    // smooth and pins the growth rate and onset; later ripples are added in
    // stages so each local solve starts inside the right basin.
    const auto& y = prob.data;
    const std::size_t i_peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double t_peak = t[i_peak] - t.front();
    // In linear units a mistimed burst overlaps the data only near the peak, so
    // windowed linear fits lock onto spurious solutions. Windows run in log
    // space whenever the data allow it; only the final full-trace solve uses
    // the requested loss.
    const bool all_positive = std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; });
    const fit::LossSpace window_loss = all_positive ? fit::LossSpace::Log10 : opt.loss_space;
    std::vector<double> x = prob.init;
    for (double factor : {1.0, 1.15, 1.3, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0}) {
        const double t_cut = t.front() + factor * t_peak;
        std::size_t n_win = 0;
        while (n_win < t.size() && t[n_win] <= t_cut) ++n_win;
        if (n_win >= t.size() || n_win < 8) continue;
        fit::FitProblem stage = prob;
        stage.data.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_win));
        stage.init = x;
        stage.loss_space = window_loss;
        const std::vector<double> t_win(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n_win));
        stage.model = [t_win, make_params, inv0, sim](std::span<const double> xx) {
            try {
                return maser_model_on_grid(make_params(xx), inv0, t_win, sim);
            } catch (const IntegrationFailure&) {
                return std::vector<double>(t_win.size(), 1e30);
            }
        };
        x = fit::nlls_minimize(stage, opt.fit).params;
    }
    prob.init = x;

    MaserFitResult out;
    out.fit = fit::nlls_minimize(prob, opt.fit);
    out.params = make_params(out.fit.params);
    const double ln10 = std::log(10.0);
    const std::array<double, 3> values{out.params.g_e, out.params.kappa_s, out.params.n_spins};
    for (std::size_t i = 0; i < 3; ++i) {
        out.log10_uncertainties[i] = out.fit.param_uncertainties[i];
        out.uncertainties[i] = values[i] * ln10 * out.fit.param_uncertainties[i];
    }
    out.cooperativity = cooperativity(out.params.g_e, out.params.kappa_c, out.params.kappa_s);
    return out;
}

}  // namespace zfmaser
