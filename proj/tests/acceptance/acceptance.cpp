// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "zfmaser/cavity.hpp"
#include "zfmaser/cqed.hpp"
#include "zfmaser/maser_fit.hpp"
#include "zfmaser/spectro.hpp"
#include "zfmaser/synthetic.hpp"
#include "zfmaser/trepr_fit.hpp"
#include "zfmaser/triplet.hpp"

using namespace zfmaser;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %2d %-28s %s; runtime %.3g s (limit %g s)%s\n", pass ? "PASS" : "FAIL", id, name,
                o.detail.c_str(), s, limit_s, in_time ? "" : " EXCEEDED");
    std::fflush(stdout);
}

}  // namespace

int main() {
    criterion(1, "cooperativity", 1e-3, [] {
        const double c = cooperativity(ordinary_to_angular(2.3e6), two_pi * 1478e6 / 3690.0, ordinary_to_angular(0.29e6));
        return Outcome{std::abs(c - 182.0) <= 1.0, fmt("C = %.3f (182 +- 1)", c)};
    });

    criterion(2, "thermal photons", 1e-3, [] {
        double worst = 0.0, lo = 1e300, hi = 0.0;
        for (int i = 0; i <= 40; ++i) {
            const double n = thermal_photons(1474e6 + i * 0.1e6, 290.0);
            worst = std::max(worst, rel(n, 4097.0));
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        return Outcome{worst <= 0.005, fmt("n_bar in [%.1f, %.1f] over 1474-1478 MHz, worst %.3f%% (0.5%%)", lo, hi,
                                           100 * worst)};
    });

    criterion(3, "cavity chain", 1e-3, [] {
        const double ql = loaded_q(1.476e9, 1.4758e9, 1.4762e9);
        const double k = coupling_from_qcircle({0.16, 1.81});
        const double qu = unloaded_q(3690.0, 0.20, 0.0);
        const bool ok = std::abs(ql - 3690.0) <= 0.5 && std::abs(k - 0.1975) <= 0.001 && std::abs(qu - 4428.0) <= 1.0;
        return Outcome{ok, fmt("Q_L = %.2f, K = %.5f, Q_u = %.2f", ql, k, qu)};
    });

    criterion(4, "combined trEPR decay", 1e-3, [] {
        const auto cd = combined_rate_from_eigen(-3.93e5, -0.459e5);
        const bool ok = rel(cd.rate, 2.19e5) <= 0.01 && std::abs(s_to_us(cd.decay_time) - 4.56) <= 0.01;
        return Outcome{ok, fmt("rate = %.4g s^-1 (2.19e5 +- 1%%), decay time %.3f us", cd.rate, s_to_us(cd.decay_time))};
    });

    criterion(5, "photophysics", 1e-3, [] {
        const auto r = rates_from_lifetimes(0.46, 0.685);
        const bool ok = std::abs(r.theta_t - 0.67) <= 0.01 && std::abs(r.kappa_ic_plus_rad - 0.714) <= 0.01;
        return Outcome{ok, fmt("theta_T = %.4f, kappa_IC+rad = %.4f ns^-1", r.theta_t, r.kappa_ic_plus_rad)};
    });

    criterion(6, "cQED conservation", 5.0, [] {
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0.0;
        for (int i = 0; i < 4; ++i) {
            MaserSystemParams p;
            p.g_e = ordinary_to_angular(0.5e6 + 4.5e6 * u(rng));
            p.n_spins = std::pow(10.0, 10.0 + 6.0 * u(rng));
            MaserSimOptions o;
            o.n_points = 500;
            const auto tr = simulate_maser(p, MaserState::initial(1e4 * u(rng), 0.1 + 0.8 * u(rng)), 0.0, 10e-6, o);
            const auto ex = tr.excitation_number();
            for (double e : ex) worst = std::max(worst, rel(e, ex.front()));
        }
        return Outcome{worst <= 1e-6, fmt("4 lossless draws over 10 us, worst drift %.2e (1e-6)", worst)};
    });

    criterion(7, "cQED fixed point", 1.0, [] {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        auto log_u = [&](double a, double b) { return a * std::pow(b / a, u(rng)); };
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            auto p = MaserSystemParams::reference();
            p.g_e = 0.0;
            p.kappa_c = log_u(1e5, 1e7);
            p.gamma = log_u(1e5, 1e6);
            p.kappa_s = log_u(1e5, 1e7);
            p.delta = 2e6 * (u(rng) - 0.5);
            MaserState s0;
            s0.photon_number = log_u(1.0, 1e12);
            s0.coherence = {1e10 * (2 * u(rng) - 1), 1e10 * (2 * u(rng) - 1)};
            s0.inversion = 2 * u(rng) - 1;
            s0.spin_correlation = 1e-3 * p.n_spins * u(rng);
            const double slowest = std::min({p.kappa_c, p.gamma, p.gamma + p.kappa_s});
            MaserSimOptions o;
            o.n_points = 2;
            const auto& s = simulate_maser(p, s0, 0.0, 20.0 / slowest, o).states.back();
            worst = std::max({worst, std::abs(s.photon_number - p.n_bar) / p.n_bar,
                              std::abs(s.coherence) / std::max(1.0, std::abs(s0.coherence)), std::abs(s.inversion),
                              std::abs(s.spin_correlation) / std::max(1.0, s0.spin_correlation)});
        }
        return Outcome{worst <= 1e-6, fmt("10 uncoupled draws after 20 decay times, worst %.2e (1e-6)", worst)};
    });

    criterion(8, "maser fit round trip", 300.0, [] {
        const auto p = MaserSystemParams::reference();
        const auto grid = linspace(0.0, 10e-6, 501);
        const auto data = synthetic::maser_burst(p, 0.52, grid, 0.0, 1);
        const MaserFitFixed fixed{p.kappa_c, p.gamma, p.n_bar, 0.52, p.delta};
        double worst = 0.0;
        bool all_converged = true;
        for (int corner = 0; corner < 8; ++corner) {
            const double f0 = (corner & 1) ? 1.3 : 0.7, f1 = (corner & 2) ? 1.3 : 0.7, f2 = (corner & 4) ? 1.3 : 0.7;
            const auto r = fit_maser_parameters(data, fixed, {p.g_e * f0, p.kappa_s * f1, p.n_spins * f2});
            all_converged = all_converged && r.fit.converged;
            worst = std::max({worst, rel(r.params.g_e, p.g_e), rel(r.params.kappa_s, p.kappa_s),
                              rel(r.params.n_spins, p.n_spins)});
        }
        return Outcome{worst <= 0.02 && all_converged,
                       fmt("8 starts at +-30%%, worst parameter error %.2e (2%%), all converged: %s", worst,
                           all_converged ? "yes" : "no")};
    });

    criterion(9, "simulated burst magnitude", 5.0, [] {
        const auto p = MaserSystemParams::reference();
        MaserSimOptions o;
        o.n_points = 4001;
        const auto tr = simulate_maser(p, MaserState::initial(p.n_bar, 0.52), 0.0, 10e-6, o);
        const auto n = tr.photon_numbers();
        const double peak = *std::max_element(n.begin(), n.end());
        // A maximum counts as a resolved oscillation if it is within 30 dB of the
        // peak and at least twice both neighbouring minima.
        std::vector<std::size_t> ext;
        for (std::size_t i = 1; i + 1 < n.size(); ++i)
            if ((n[i] > n[i - 1] && n[i] >= n[i + 1]) || (n[i] < n[i - 1] && n[i] <= n[i + 1])) ext.push_back(i);
        int resolved = 0;
        for (std::size_t k = 1; k + 1 < ext.size(); ++k) {
            const double v = n[ext[k]];
            if (v > n[ext[k - 1]] && v >= 1e-3 * peak && v >= 2 * n[ext[k - 1]] && v >= 2 * n[ext[k + 1]]) ++resolved;
        }
        const double ratio = peak / 2.4e14;
        return Outcome{ratio >= 1.0 / 3.0 && ratio <= 3.0 && resolved >= 3,
                       fmt("peak %.3g photons (%.2fx of 2.4e14), %d resolved oscillations", peak, ratio, resolved)};
    });

    criterion(10, "Rabi extraction", 1.0, [] {
        std::vector<double> t, y;
        for (int i = 0; i <= 400; ++i) {
            const double ti = i / 50e6;
            t.push_back(ti);
            y.push_back(std::exp(-ti / 3e-6) * (1.0 + 0.5 * std::cos(two_pi * 1.6e6 * ti)));
        }
        const auto est = extract_rabi_frequency(TimeTrace(t, y, Unit::Photons), 0.0, 8e-6);
        return Outcome{rel(est.frequency, 1.6e6) <= 0.02, fmt("f = %.5g Hz (1.6 MHz +- 2%%)", est.frequency)};
    });

    criterion(11, "SVD oracle", 5.0, [] {
        const auto r = svd_global_analysis(synthetic::rank2_tas({}, 7));
        bool ok = r.significant_count == 2 && r.component_lifetimes.size() == 2;
        const double e1 = ok ? rel(r.component_lifetimes[0], 450.0) : 1.0;
        const double e2 = ok ? rel(r.component_lifetimes[1], 650.0) : 1.0;
        ok = ok && e1 <= 0.05 && e2 <= 0.05;

        std::mt19937_64 rng(11);
        std::normal_distribution<double> nd(0.0, 1.0);
        double worst_ey = 0.0;
        for (int m = 0; m < 3; ++m) {
            Eigen::MatrixXd a(50, 200);
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = nd(rng);
            const SpectrumMatrix sm(linspace(400.0, 800.0, 50), linspace(0.0, 1000.0, 200), a);
            const auto g = svd_global_analysis(sm);
            for (std::size_t k = 0; k <= 50; ++k) {
                double tail = 0.0;
                for (std::size_t i = k; i < 50; ++i) tail += g.singular_values[i] * g.singular_values[i];
                worst_ey = std::max(worst_ey, std::abs((a - reconstruct(g, k)).norm() - std::sqrt(tail)) / a.norm());
            }
        }
        ok = ok && worst_ey <= 1e-10;
        return Outcome{ok, fmt("%zu components, lifetimes %.1f/%.1f ps (errors %.2f%%/%.2f%%), Eckart-Young %.1e",
                               r.significant_count, r.component_lifetimes.size() > 0 ? r.component_lifetimes[0] : 0.0,
                               r.component_lifetimes.size() > 1 ? r.component_lifetimes[1] : 0.0, 100 * e1, 100 * e2,
                               worst_ey)};
    });

    criterion(12, "biexponential round trip", 5.0, [] {
        BiexpFit truth;
        truth.A = 0.547;
        truth.B = -0.066;
        truth.alpha_minus = -3.93e5;
        truth.alpha_plus = -0.459e5;
        auto worst_of = [&](const BiexpFit& f) {
            return std::max({rel(f.A, truth.A), rel(f.B, truth.B), rel(f.alpha_minus, truth.alpha_minus),
                             rel(f.alpha_plus, truth.alpha_plus)});
        };
        // 0-40 us at 10 ns spacing.
        const auto grid = linspace(0.0, 40e-6, 4000);
        const double clean = worst_of(fit_biexponential(synthetic::trepr(truth, grid, 0.0, 1)));
        double noisy = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed)
            noisy = std::max(noisy, worst_of(fit_biexponential(synthetic::trepr(truth, grid, 0.01, seed))));
        return Outcome{clean <= 1e-6 && noisy <= 0.05,
                       fmt("noiseless %.1e (1e-6), 1%% noise worst of 20 seeds %.2f%% (5%%)", clean, 100 * noisy)};
    });

    std::printf("%d of 12 criteria failed\n", failures);
    return failures ? 1 : 0;
}
