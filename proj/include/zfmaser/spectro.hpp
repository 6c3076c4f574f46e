#pragma once

// Transient-absorption global analysis, TCSPC tail fits and quantum-yield
// arithmetic.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "zfmaser/error.hpp"
#include "zfmaser/expfit.hpp"
#include "zfmaser/trepr_fit.hpp"
#include "zfmaser/units.hpp"

namespace zfmaser {

/// Delta-A(lambda, t): rows are wavelengths, columns are delays.
class SpectrumMatrix {
public:
    SpectrumMatrix(std::vector<double> wavelengths_nm, std::vector<double> delays_ps, Eigen::MatrixXd delta_a)
        : wl_(std::move(wavelengths_nm)), delays_(std::move(delays_ps)), a_(std::move(delta_a)) {
        if (static_cast<std::size_t>(a_.rows()) != wl_.size() || static_cast<std::size_t>(a_.cols()) != delays_.size())
            throw InvalidInput("SpectrumMatrix: array shape does not match the axes");
        auto increasing = [](const std::vector<double>& v) {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (!(v[i] > v[i - 1])) return false;
            return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
        };
        if (!increasing(wl_)) throw InvalidInput("SpectrumMatrix: wavelengths must be finite and increasing");
        if (!increasing(delays_)) throw InvalidInput("SpectrumMatrix: delays must be finite and increasing");
        if (!a_.allFinite()) throw InvalidInput("SpectrumMatrix: non-finite delta A");
    }

    const std::vector<double>& wavelengths() const { return wl_; }
    const std::vector<double>& delays() const { return delays_; }
    const Eigen::MatrixXd& delta_a() const { return a_; }

private:
    std::vector<double> wl_, delays_;
    Eigen::MatrixXd a_;
};

struct GlobalAnalysisResult {
    std::vector<double> singular_values;   // descending
    Eigen::MatrixXd spectral_components;   // wavelength x rank, unit columns
    Eigen::MatrixXd time_profiles;         // delay x rank, unit columns
    std::size_t significant_count = 0;
    // Shared-rate fit of all significant profiles (sigma_i v_i) with
    // significant_count exponentials plus offset; ascending, in delay units.
    // Above fit::max_grid_components these are the sorted profile lifetimes.
    std::vector<double> component_lifetimes;
    std::vector<double> component_lifetime_uncertainties;
    // Each significant profile fitted on its own, c exp(-t/tau) + offset.
    std::vector<double> profile_lifetimes;
    Eigen::MatrixXd decay_associated_spectra;  // wavelength x significant_count
    bool lifetimes_converged = false;
};

namespace detail {

inline void fix_sign(Eigen::Ref<Eigen::VectorXd> u, Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index i = 0;
    u.cwiseAbs().maxCoeff(&i);
    if (u(i) < 0.0) {
        u = -u;
        v = -v;
    }
}

}  // namespace detail

/// Full SVD of delta A. Components with sigma >= threshold * sigma_max are
/// significant; their time profiles are fitted for lifetimes using delays >= 0
/// only. No mean-centering.
inline GlobalAnalysisResult svd_global_analysis(const SpectrumMatrix& m, double threshold = 0.10,
                                                const fit::FitOptions& opt = {}) {
    const auto& A = m.delta_a();
    if (A.rows() < 2 || A.cols() < 2) throw InvalidInput("svd_global_analysis: matrix must be at least 2x2");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidInput("svd_global_analysis: threshold must be in (0, 1]");

    GlobalAnalysisResult out;
    if (A.isZero(0.0)) {
        out.lifetimes_converged = true;
        return out;
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    out.spectral_components = svd.matrixU();
    out.time_profiles = svd.matrixV();
    out.singular_values.assign(s.data(), s.data() + s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        detail::fix_sign(out.spectral_components.col(i), out.time_profiles.col(i));
    while (out.significant_count < out.singular_values.size() &&
           out.singular_values[out.significant_count] >= threshold * out.singular_values[0])
        ++out.significant_count;

    // Lifetimes from the non-negative delays.
    const auto& d = m.delays();
    const std::size_t first = static_cast<std::size_t>(std::lower_bound(d.begin(), d.end(), 0.0) - d.begin());
    const std::vector<double> t(d.begin() + static_cast<std::ptrdiff_t>(first), d.end());
    const std::size_t k = out.significant_count;
    if (t.size() < 2 * k + 3) {
        out.lifetimes_converged = false;
        return out;
    }
    const auto [rmin, rmax] = fit::default_rate_band(t);
    std::vector<std::vector<double>> profiles(k, std::vector<double>(t.size()));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < t.size(); ++j)
            profiles[i][j] = out.singular_values[i] *
                             out.time_profiles(static_cast<Eigen::Index>(first + j), static_cast<Eigen::Index>(i));

    fit::ExpSumSpec spec;
    spec.offset = true;
    spec.rate_min = rmin;
    spec.rate_max = rmax;
    spec.components = 1;
    for (const auto& p : profiles) {
        const auto f = fit::fit_exp_sum(t, {p}, spec, opt);
        out.profile_lifetimes.push_back(1.0 / f.rates[0]);
    }

    if (k > fit::max_grid_components) {
        // Too many components for a shared-rate fit: report the per-profile values.
        out.component_lifetimes = out.profile_lifetimes;
        std::sort(out.component_lifetimes.begin(), out.component_lifetimes.end());
        out.component_lifetime_uncertainties.assign(k, std::numeric_limits<double>::quiet_NaN());
        out.lifetimes_converged = false;
        return out;
    }
    spec.components = k;
    const auto g = fit::fit_exp_sum(t, profiles, spec, opt);
    out.lifetimes_converged = g.result.converged;
    out.decay_associated_spectra = Eigen::MatrixXd::Zero(A.rows(), static_cast<Eigen::Index>(k));
    // Ascending lifetime = descending rate.
    for (std::size_t jj = 0; jj < k; ++jj) {
        const std::size_t j = k - 1 - jj;
        out.component_lifetimes.push_back(1.0 / g.rates[j]);
        out.component_lifetime_uncertainties.push_back(g.rate_uncertainties[j] / (g.rates[j] * g.rates[j]));
        for (std::size_t i = 0; i < k; ++i)
            out.decay_associated_spectra.col(static_cast<Eigen::Index>(jj)) +=
                g.amplitudes[i][j] * out.spectral_components.col(static_cast<Eigen::Index>(i));
    }
    return out;
}

/// Rank-k approximation U_k S_k V_k^T.
inline Eigen::MatrixXd reconstruct(const GlobalAnalysisResult& r, std::size_t k) {
    if (k > r.singular_values.size()) throw InvalidInput("reconstruct: k exceeds the rank");
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::VectorXd s(kk);
    for (Eigen::Index i = 0; i < kk; ++i) s(i) = r.singular_values[static_cast<std::size_t>(i)];
    return r.spectral_components.leftCols(kk) * s.asDiagonal() * r.time_profiles.leftCols(kk).transpose();
}

struct TcspcFit {
    std::vector<double> lifetimes;               // ascending, seconds
    std::vector<double> lifetime_uncertainties;
    std::vector<double> amplitudes;              // normalized, sum to 1
    double amplitude_scale = 0.0;                // counts at the peak
    double peak_time = 0.0;
    std::size_t components_supported = 0;
    double reduced_chi2 = 0.0;
    bool converged = false;
};

/// Tail fit from the count maximum onwards with Neyman weights 1/sqrt(max(y, 1)).
/// Components the data cannot support (nested F-test) come back with zero
/// amplitude and converged = false.
inline TcspcFit fit_tcspc(const TimeTrace& trace, std::size_t n_components, const fit::FitOptions& opt = {}) {
    trace.require(Unit::Counts, "fit_tcspc");
    if (n_components < 1 || n_components > 3) throw InvalidInput("fit_tcspc: n_components must be 1, 2 or 3");
    const auto y_all = trace.y();
    const auto t_all = trace.t();
    const std::size_t ip = static_cast<std::size_t>(std::max_element(y_all.begin(), y_all.end()) - y_all.begin());
    if (y_all.size() - ip < 50) throw InvalidInput("fit_tcspc: need at least 50 samples past the peak");
    for (double v : y_all)
        if (v < 0.0) throw InvalidInput("fit_tcspc: counts must be non-negative");

    std::vector<double> t, y, w;
    for (std::size_t i = ip; i < y_all.size(); ++i) {
        t.push_back(t_all[i] - t_all[ip]);
        y.push_back(y_all[i]);
        w.push_back(1.0 / std::sqrt(std::max(y_all[i], 1.0)));
    }
    const auto [rmin, rmax] = fit::default_rate_band(t);
    fit::ExpSumSpec spec;
    spec.rate_min = rmin;
    spec.rate_max = rmax;
    spec.weights = w;
    double scale_sq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) scale_sq += w[i] * w[i] * y[i] * y[i];

    std::vector<fit::ExpSumFit> fits;
    std::size_t supported = 1;
    bool chain_ok = true;
    for (std::size_t k = 1; k <= n_components; ++k) {
        spec.components = k;
        fits.push_back(fit::fit_exp_sum(t, {y}, spec, opt));
        if (k > 1 && chain_ok) {
            const auto& lo = fits[k - 2];
            const auto& hi = fits[k - 1];
            const double s_lo = lo.result.residual_norm * lo.result.residual_norm;
            const double s_hi = hi.result.residual_norm * hi.result.residual_norm;
            bool distinct = true;
            for (std::size_t j = 1; j < k; ++j)
                distinct = distinct && (hi.rates[j] - hi.rates[j - 1]) > 1e-3 * hi.rates[j];
            bool positive = std::all_of(hi.amplitudes[0].begin(), hi.amplitudes[0].end(), [](double a) { return a > 0.0; });
            if (distinct && positive && detail::extra_component_supported(s_lo, s_hi, t.size(), 2 * k, scale_sq))
                supported = k;
            else
                chain_ok = false;
        }
    }

    const auto& best = fits[supported - 1];
    TcspcFit out;
    out.peak_time = t_all[ip];
    out.components_supported = supported;
    double sum = 0.0;
    for (double a : best.amplitudes[0]) sum += a;
    out.amplitude_scale = sum;
    // Ascending lifetime = descending rate.
    for (std::size_t jj = 0; jj < supported; ++jj) {
        const std::size_t j = supported - 1 - jj;
        out.lifetimes.push_back(1.0 / best.rates[j]);
        out.lifetime_uncertainties.push_back(best.rate_uncertainties[j] / (best.rates[j] * best.rates[j]));
        out.amplitudes.push_back(best.amplitudes[0][j] / sum);
    }
    for (std::size_t j = supported; j < n_components; ++j) {
        out.lifetimes.push_back(out.lifetimes.back());
        out.lifetime_uncertainties.push_back(0.0);
        out.amplitudes.push_back(0.0);
    }
    const double rn = best.result.residual_norm;
    out.reduced_chi2 = rn * rn / static_cast<double>(t.size() - 2 * supported);
    auto at_bound = [&](double r) { return r <= rmin / 100.0 * (1 + 1e-9) || r >= rmax * 100.0 * (1 - 1e-9); };
    out.converged = best.result.converged && supported == n_components && sum > 0.0 &&
                    std::none_of(best.rates.begin(), best.rates.end(), at_bound);
    return out;
}

struct PhotophysicsRates {
    double kappa_f;            // ns^-1
    double kappa_isc;          // ns^-1
    double kappa_ic_plus_rad;  // ns^-1
    double theta_t;
};

inline PhotophysicsRates rates_from_lifetimes(double tau_f_ns, double tau_isc_ns) {
    if (!(tau_f_ns > 0.0) || !(tau_isc_ns > 0.0) || !std::isfinite(tau_f_ns) || !std::isfinite(tau_isc_ns))
        throw InvalidInput("rates_from_lifetimes: lifetimes must be positive");
    if (tau_isc_ns < tau_f_ns)
        throw InconsistentLifetimes("rates_from_lifetimes: tau_isc < tau_f would give a triplet yield above 1");
    PhotophysicsRates r;
    r.kappa_f = 1.0 / tau_f_ns;
    r.kappa_isc = 1.0 / tau_isc_ns;
    r.kappa_ic_plus_rad = r.kappa_f - r.kappa_isc;
    r.theta_t = r.kappa_isc / r.kappa_f;
    return r;
}

}  // namespace zfmaser
