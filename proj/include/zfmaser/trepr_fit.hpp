#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "zfmaser/expfit.hpp"
#include "zfmaser/triplet.hpp"
#include "zfmaser/units.hpp"

namespace zfmaser {

namespace detail {

// Is the k-component fit a real improvement over the (k-1)-component one?
// Extra-sum-of-squares F statistic with 2 extra parameters per component.
inline bool extra_component_supported(double ssr_fewer, double ssr_more, std::size_t m,
                                      std::size_t p_more, double data_scale_sq) {
    if (ssr_fewer <= 1e-20 * data_scale_sq) return false;  // already exact
    if (m <= p_more) return false;
    const double denom = ssr_more / static_cast<double>(m - p_more);
    if (denom <= 0.0) return true;
    const double f = (ssr_fewer - ssr_more) / 2.0 / denom;
    return f > 10.0;
}

}  // namespace detail

/// Fits A e^(a_- t) + B e^(a_+ t) with both rates negative and |a_-| >= |a_+|.
/// When the second component is not supported by the data (nested F-test) the
/// single-exponential fit is returned with B = 0 and a_+ = a_-.
inline BiexpFit fit_biexponential(const TimeTrace& trace, std::optional<BiexpFit> init = std::nullopt,
                                  const fit::FitOptions& opt = {}) {
    if (trace.unit() != Unit::Dimensionless && trace.unit() != Unit::Volts)
        throw InvalidInput("fit_biexponential: expected a dimensionless or voltage trace");
    if (trace.size() < 8) throw InvalidInput("fit_biexponential: need at least 8 samples");
    const auto t = trace.t();
    const std::vector<std::vector<double>> profile{{trace.y().begin(), trace.y().end()}};
    const auto [rmin, rmax] = fit::default_rate_band(t);
    double scale_sq = 0.0;
    for (double v : trace.y()) scale_sq += v * v;

    fit::ExpSumSpec mono_spec;
    mono_spec.components = 1;
    mono_spec.rate_min = rmin;
    mono_spec.rate_max = rmax;
    const auto mono = fit::fit_exp_sum(t, profile, mono_spec, opt);

    fit::ExpSumSpec bi_spec = mono_spec;
    bi_spec.components = 2;
    if (init) bi_spec.init_rates = std::vector<double>{-init->alpha_minus, -init->alpha_plus};
    const auto bi = fit::fit_exp_sum(t, profile, bi_spec, opt);

    const double ssr1 = mono.result.residual_norm * mono.result.residual_norm;
    const double ssr2 = bi.result.residual_norm * bi.result.residual_norm;
    const bool distinct = std::abs(bi.rates[1] - bi.rates[0]) > 1e-3 * bi.rates[1];
    const bool use_bi = distinct && detail::extra_component_supported(ssr1, ssr2, t.size(), 4, scale_sq);

    const bool constant_data = std::all_of(trace.y().begin(), trace.y().end(),
                                           [&](double v) { return v == trace.y()[0]; });
    auto at_bound = [&](double r) { return r <= rmin / 100.0 * (1 + 1e-9) || r >= rmax * 100.0 * (1 - 1e-9); };

    BiexpFit out;
    if (use_bi) {
        out.alpha_minus = -bi.rates[1];
        out.alpha_plus = -bi.rates[0];
        out.A = bi.amplitudes[0][1];
        out.B = bi.amplitudes[0][0];
        out.uncertainties = {bi.amplitude_uncertainties[0][1], bi.amplitude_uncertainties[0][0],
                             bi.rate_uncertainties[1], bi.rate_uncertainties[0]};
        out.residual_norm = bi.result.residual_norm;
        out.converged = bi.result.converged && !at_bound(bi.rates[0]) && !at_bound(bi.rates[1]);
        out.components_supported = 2;
    } else {
        out.alpha_minus = out.alpha_plus = -mono.rates[0];
        out.A = mono.amplitudes[0][0];
        out.B = 0.0;
        out.uncertainties = {mono.amplitude_uncertainties[0][0], 0.0, mono.rate_uncertainties[0],
                             mono.rate_uncertainties[0]};
        out.residual_norm = mono.result.residual_norm;
        out.converged = mono.result.converged && !at_bound(mono.rates[0]);
        out.components_supported = 1;
    }
    if (constant_data) out.converged = false;
    return out;
}

}  // namespace zfmaser
