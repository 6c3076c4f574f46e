#include <gtest/gtest.h>

#include <limits>
#include <type_traits>

#include "support.hpp"
#include "zfmaser/cqed.hpp"

using namespace zfmaser;
using zfmaser::testing::Gen;
using zfmaser::testing::rel_err;

namespace {

MaserState random_state(Gen& g, double n_spins) {
    MaserState s;
    s.photon_number = g.log_uniform(1.0, 1e12);
    s.coherence = {g.uniform(-1.0, 1.0) * 1e10, g.uniform(-1.0, 1.0) * 1e10};
    s.inversion = g.uniform(-1.0, 1.0);
    s.spin_correlation = g.uniform(0.0, 1.0) * n_spins * 1e-3;
    return s;
}

MaserSystemParams lossless(double g_e, double n_spins) {
    MaserSystemParams p;
    p.g_e = g_e;
    p.n_spins = n_spins;
    return p;
}

}  // namespace

TEST(MaserRhs, DecouplesWithoutCoupling) {
    Gen g(3);
    for (int i = 0; i < 200; ++i) {
        auto p = MaserSystemParams::reference();
        p.g_e = 0.0;
        p.delta = g.uniform(-1e6, 1e6);
        const auto s = random_state(g, p.n_spins);
        const auto d = maser_rhs(s, p);
        EXPECT_LT(rel_err(d.photon_number, -p.kappa_c * (s.photon_number - p.n_bar)), 1e-12);
        EXPECT_DOUBLE_EQ(d.inversion, -p.gamma * s.inversion);
        EXPECT_DOUBLE_EQ(d.spin_correlation, -(p.gamma + p.kappa_s) * s.spin_correlation);
        const std::complex<double> damp(0.5 * (p.kappa_c + p.gamma + p.kappa_s), p.delta);
        EXPECT_LT(std::abs(d.coherence + damp * s.coherence), 1e-12 * std::abs(damp * s.coherence));
    }
}

TEST(MaserRhs, LosslessExcitationIsStationary) {
    Gen g(4);
    for (int i = 0; i < 500; ++i) {
        const auto p = lossless(g.log_uniform(1e5, 1e8), g.log_uniform(1e3, 1e16));
        const auto s = random_state(g, p.n_spins);
        const auto d = maser_rhs(s, p);
        const double rate = d.photon_number + 0.5 * p.n_spins * d.inversion;
        EXPECT_LE(std::abs(rate), 1e-12 * std::abs(d.photon_number) + 1e-300);
    }
}

TEST(MaserRhs, RealCoherenceGivesPureRelaxation) {
    Gen g(5);
    for (int i = 0; i < 200; ++i) {
        const auto p = MaserSystemParams::reference();
        auto s = random_state(g, p.n_spins);
        s.coherence = {s.coherence.real(), 0.0};
        // Same expression up to the order of the two products.
        const double scale = p.kappa_c * std::max(p.n_bar, s.photon_number);
        EXPECT_LE(std::abs(maser_rhs(s, p).photon_number - p.kappa_c * (p.n_bar - s.photon_number)),
                  4.0 * std::numeric_limits<double>::epsilon() * scale);
    }
}

TEST(MaserState, ObservablesAreStoredReal) {
    static_assert(std::is_same_v<decltype(MaserState::photon_number), double>);
    static_assert(std::is_same_v<decltype(MaserState::inversion), double>);
    static_assert(std::is_same_v<decltype(MaserState::spin_correlation), double>);
    static_assert(std::is_same_v<decltype(MaserState::coherence), std::complex<double>>);
    const auto s = MaserState::initial(4097.0);
    EXPECT_EQ(s.photon_number, 4097.0);
    EXPECT_EQ(s.inversion, 0.52);
    EXPECT_EQ(s.coherence, std::complex<double>(0.0, 0.0));
    EXPECT_EQ(s.spin_correlation, 0.0);
}

TEST(SimulateMaser, UncoupledCavityRelaxesExponentially) {
    auto p = MaserSystemParams::reference();
    p.g_e = 0.0;
    MaserState init = MaserState::initial(10.0 * p.n_bar);
    MaserSimOptions o;
    o.n_points = 400;
    const auto tr = simulate_maser(p, init, 0.0, 10e-6, o);
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const double want = p.n_bar + 9.0 * p.n_bar * std::exp(-p.kappa_c * tr.t[i]);
        EXPECT_LT(rel_err(tr.states[i].photon_number, want), 1e-6) << tr.t[i];
    }
}

TEST(SimulateMaser, LosslessConservationProperty) {
    Gen g(6);
    for (int i = 0; i < 6; ++i) {
        const auto p = lossless(ordinary_to_angular(g.uniform(0.5e6, 5e6)), g.log_uniform(1e10, 1e16));
        const auto init = MaserState::initial(g.uniform(0.0, 1e4), g.uniform(0.1, 0.9));
        MaserSimOptions o;
        o.n_points = 500;
        const auto tr = simulate_maser(p, init, 0.0, 10e-6, o);
        const auto ex = tr.excitation_number();
        for (double e : ex) EXPECT_LT(rel_err(e, ex.front()), 1e-6);
    }
}

TEST(SimulateMaser, FixedPointWithoutCoupling) {
    Gen g(7);
    for (int i = 0; i < 10; ++i) {
        auto p = MaserSystemParams::reference();
        p.g_e = 0.0;
        p.kappa_c = g.log_uniform(1e5, 1e7);
        p.gamma = g.log_uniform(1e5, 1e6);
        p.kappa_s = g.log_uniform(1e5, 1e7);
        p.delta = g.uniform(-1e6, 1e6);
        const auto init = random_state(g, p.n_spins);
        const double slowest = std::min({p.kappa_c, p.gamma, p.gamma + p.kappa_s});
        MaserSimOptions o;
        o.n_points = 2;
        const auto tr = simulate_maser(p, init, 0.0, 20.0 / slowest, o);
        const auto& s = tr.states.back();
        EXPECT_LT(std::abs(s.photon_number - p.n_bar), 1e-6 * std::max(p.n_bar, 1.0));
        EXPECT_LT(std::abs(s.coherence), 1e-6 * std::max(1.0, std::abs(init.coherence)));
        EXPECT_LT(std::abs(s.inversion), 1e-6);
        EXPECT_LT(std::abs(s.spin_correlation), 1e-6 * std::max(1.0, init.spin_correlation));
    }
}

TEST(SimulateMaser, ToleranceConvergence) {
    const auto check = [](const MaserSystemParams& p, const MaserState& init, double rtol, double atol) {
        MaserSimOptions coarse;
        coarse.tol = {rtol, atol};
        coarse.n_points = 1000;
        MaserSimOptions fine = coarse;
        fine.tol = {rtol / 2, atol / 2};
        const auto a = simulate_maser(p, init, 0.0, 10e-6, coarse);
        const auto b = simulate_maser(p, init, 0.0, 10e-6, fine);
        for (std::size_t i = 0; i < a.t.size(); ++i) {
            const auto ya = detail::to_scaled(a.states[i], p.n_spins);
            const auto yb = detail::to_scaled(b.states[i], p.n_spins);
            for (std::size_t j = 0; j < 5; ++j)
                EXPECT_LE(std::abs(ya[j] - yb[j]), a.error_estimate[i]) << "t=" << a.t[i] << " j=" << j;
        }
    };
    const auto ref = MaserSystemParams::reference();
    check(ref, MaserState::initial(ref.n_bar), 1e-8, 1e-20);
    check(ref, MaserState::initial(ref.n_bar), 1e-8, 1e-12);
    check(ref, MaserState::initial(ref.n_bar), 1e-6, 1e-10);
    Gen g(8);
    for (int i = 0; i < 3; ++i) {
        auto p = ref;
        p.g_e *= g.uniform(0.7, 1.3);
        p.kappa_s *= g.uniform(0.7, 1.3);
        p.n_spins *= g.uniform(0.5, 2.0);
        check(p, MaserState::initial(p.n_bar, g.uniform(0.3, 0.7)), 1e-7, 1e-18);
    }
}

TEST(SimulateMaser, ReferenceBurst) {
    const auto p = MaserSystemParams::reference();
    const auto tr = simulate_maser(p, MaserState::initial(p.n_bar, 0.52), 0.0, 10e-6);
    const auto n = tr.photon_numbers();
    const auto it = std::max_element(n.begin(), n.end());
    const double t_peak = tr.t[static_cast<std::size_t>(it - n.begin())];
    EXPECT_GT(*it / p.n_bar, 1e9);
    EXPECT_LT(t_peak, 2.0e-6);
    EXPECT_GT(t_peak, 0.0);
    // Ringing after the peak: at least one later local maximum.
    int maxima = 0;
    for (std::size_t i = static_cast<std::size_t>(it - n.begin()) + 1; i + 1 < n.size(); ++i)
        if (n[i] > n[i - 1] && n[i] >= n[i + 1]) ++maxima;
    EXPECT_GE(maxima, 1);
}

TEST(SimulateMaser, Errors) {
    const auto p = MaserSystemParams::reference();
    const auto init = MaserState::initial(p.n_bar);
    EXPECT_THROW(simulate_maser(p, init, 1e-6, 1e-6), InvalidInput);
    EXPECT_THROW(simulate_maser(p, init, 2e-6, 1e-6), InvalidInput);
    MaserSimOptions bad;
    bad.tol.atol = 0.0;
    EXPECT_THROW(simulate_maser(p, init, 0.0, 1e-6, bad), InvalidInput);
    auto neg = p;
    neg.kappa_c = -1.0;
    EXPECT_THROW(simulate_maser(neg, init, 0.0, 1e-6), InvalidInput);
    auto few = p;
    few.n_spins = 0.5;
    EXPECT_THROW(simulate_maser(few, init, 0.0, 1e-6), InvalidInput);
}

TEST(Cooperativity, ReferenceValue) {
    const double c = cooperativity(ordinary_to_angular(2.3e6), 2.517e6, ordinary_to_angular(0.29e6));
    EXPECT_NEAR(c, 182.0, 1.0);
    EXPECT_EQ(cooperativity(0.0, 1.0, 1.0), 0.0);
}

TEST(Cooperativity, HomogeneityProperties) {
    Gen g(9);
    for (int i = 0; i < 1000; ++i) {
        const double ge = g.log_uniform(1e3, 1e9), kc = g.log_uniform(1e3, 1e9), ks = g.log_uniform(1e3, 1e9);
        const double s = g.log_uniform(1e-3, 1e3);
        const double c = cooperativity(ge, kc, ks);
        EXPECT_LT(rel_err(cooperativity(s * ge, kc, ks), s * s * c), 1e-14);
        EXPECT_LT(rel_err(cooperativity(s * ge, s * kc, s * ks), c), 1e-14);
    }
}

TEST(Cooperativity, Errors) {
    EXPECT_THROW(cooperativity(1.0, 0.0, 1.0), InvalidInput);
    EXPECT_THROW(cooperativity(1.0, 1.0, 0.0), InvalidInput);
    EXPECT_THROW(cooperativity(1.0, -1.0, 1.0), InvalidInput);
}

TEST(PredictedRabi, Values) {
    EXPECT_LT(rel_err(predicted_rabi(ordinary_to_angular(2.3e6)), ordinary_to_angular(4.6e6)), 1e-15);
    EXPECT_EQ(predicted_rabi(0.0), 0.0);
    Gen g(10);
    for (int i = 0; i < 100; ++i) {
        const double x = g.log_uniform(1.0, 1e10);
        EXPECT_EQ(predicted_rabi(2.0 * x), 2.0 * predicted_rabi(x));
    }
}

TEST(RabiExtraction, ConstructedSignal) {
    std::vector<double> t, y;
    for (int i = 0; i <= 400; ++i) {
        const double ti = i / 50e6;
        t.push_back(ti);
        y.push_back(std::exp(-ti / 3e-6) * (1.0 + 0.5 * std::cos(two_pi * 1.6e6 * ti)));
    }
    const TimeTrace tr(t, y, Unit::Photons);
    const auto est = extract_rabi_frequency(tr, 0.0, 8e-6);
    EXPECT_LT(rel_err(est.frequency, 1.6e6), 0.02);
    EXPECT_GT(est.peak_magnitude, 3.0 * est.floor_magnitude);
}

TEST(RabiExtraction, FrequencySweepProperty) {
    Gen g(11);
    for (int k = 0; k < 20; ++k) {
        const double f = g.uniform(0.8e6, 5e6), tau = g.uniform(2e-6, 10e-6), phase = g.uniform(0.0, two_pi);
        std::vector<double> t, y;
        for (int i = 0; i <= 400; ++i) {
            const double ti = i / 50e6;
            t.push_back(ti);
            y.push_back(std::exp(-ti / tau) * (1.0 + 0.5 * std::cos(two_pi * f * ti + phase)));
        }
        const auto est = extract_rabi_frequency(TimeTrace(t, y, Unit::Photons), 0.0, 8e-6);
        EXPECT_LT(rel_err(est.frequency, f), 0.02) << f;
    }
}

TEST(RabiExtraction, ConstantTraceHasNoOscillation) {
    const auto t = linspace(0.0, 8e-6, 401);
    const TimeTrace tr(t, std::vector<double>(t.size(), 5.0), Unit::Photons);
    EXPECT_THROW(extract_rabi_frequency(tr, 0.0, 8e-6), NoOscillation);
}

TEST(RabiExtraction, RequiresPhotonTrace) {
    const auto t = linspace(0.0, 8e-6, 401);
    const TimeTrace tr(t, std::vector<double>(t.size(), 5.0), Unit::Watts);
    EXPECT_THROW(extract_rabi_frequency(tr, 0.0, 8e-6), InvalidInput);
    const TimeTrace ph(t, std::vector<double>(t.size(), 5.0), Unit::Photons);
    EXPECT_THROW(extract_rabi_frequency(ph, 0.0, 1e-7), InvalidInput);
}

TEST(RabiExtraction, SimulatedBurstIsSlowerThanPredicted) {
    const auto p = MaserSystemParams::reference();
    const auto tr = simulate_maser(p, MaserState::initial(p.n_bar, 0.52), 0.0, 10e-6);
    const auto est = extract_rabi_frequency(tr.photon_trace(), 0.0, 10e-6);
    const double predicted = angular_to_ordinary(predicted_rabi(p.g_e));
    const double ratio = predicted / est.frequency;
    EXPECT_GT(ratio, 1.0 / 3.5);
    EXPECT_LT(ratio, 3.5);
}
