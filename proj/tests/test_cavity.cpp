#include <gtest/gtest.h>

#include "support.hpp"
#include "zfmaser/cavity.hpp"

using namespace zfmaser;
using zfmaser::testing::Gen;
using zfmaser::testing::rel_err;

TEST(QCircle, LossyPortOne) {
    const double k = coupling_from_qcircle({0.16, 1.81});
    EXPECT_NEAR(k, 0.1975, 0.001);
    EXPECT_NEAR(k, 0.20, 0.005);
}

TEST(QCircle, LosslessAndZero) {
    EXPECT_DOUBLE_EQ(coupling_from_qcircle({1.0, std::nullopt}), 1.0);
    EXPECT_EQ(coupling_from_qcircle({0.0, std::nullopt}), 0.0);
    EXPECT_EQ(coupling_from_qcircle({0.0, 1.5}), 0.0);
}

TEST(QCircle, InvalidGeometry) {
    EXPECT_THROW(coupling_from_qcircle({0.5, 1.0}), InvalidGeometry);
    EXPECT_THROW(coupling_from_qcircle({0.5, 0.8}), InvalidGeometry);
    EXPECT_THROW(coupling_from_qcircle({1.9, 1.5}), InvalidGeometry);  // d > d2
    EXPECT_THROW(coupling_from_qcircle({-0.1, std::nullopt}), InvalidGeometry);
    EXPECT_THROW(coupling_from_qcircle({2.0, std::nullopt}), InvalidGeometry);
}

TEST(QCircle, LossyReducesToLosslessAtTwo) {
    Gen g(1);
    for (int i = 0; i < 200; ++i) {
        const double d = g.uniform(0.0, 1.99);
        const double lossy = coupling_from_qcircle({d, 2.0});
        const double ideal = d / 1.0;
        EXPECT_DOUBLE_EQ(lossy, ideal);
        // The lossless reading of the same circle uses the full unit-circle diameter.
        EXPECT_DOUBLE_EQ(coupling_from_qcircle({d, std::nullopt}), d / (2.0 - d));
    }
}

TEST(LoadedQ, FromHalfPowerPoints) {
    EXPECT_NEAR(loaded_q(1.476e9, 1.4758e9, 1.4762e9), 3690.0, 1e-6);
    // bandwidth read from the transmission peak
    const double bw = 400.2e3;
    EXPECT_NEAR(loaded_q(1.476e9, 1.476e9 - bw / 2, 1.476e9 + bw / 2), 3688.0, 0.5);
}

TEST(LoadedQ, InverseConstruction) {
    Gen g(2);
    for (int i = 0; i < 100; ++i) {
        const double q = g.log_uniform(10, 1e5), f0 = g.log_uniform(1e8, 1e10);
        const double df = f0 / q;
        EXPECT_LT(rel_err(loaded_q(f0, f0 - df / 2, f0 + df / 2), q), 1e-10);
    }
}

TEST(LoadedQ, RejectsBadBand) {
    EXPECT_THROW(loaded_q(1.476e9, 1.476e9, 1.476e9), InvalidInput);
    EXPECT_THROW(loaded_q(1.476e9, 1.477e9, 1.478e9), InvalidInput);
    EXPECT_THROW(loaded_q(1.476e9, 1.4762e9, 1.4758e9), InvalidInput);
}

TEST(UnloadedQ, Values) {
    EXPECT_NEAR(unloaded_q(3690, 0.20, 0.0), 4428.0, 1e-9);
    EXPECT_DOUBLE_EQ(unloaded_q(3690, 0.0, 0.0), 3690.0);
    EXPECT_DOUBLE_EQ(unloaded_q(3690, 1.0, 0.0), 7380.0);
    EXPECT_THROW(unloaded_q(0.0, 0.2, 0.0), InvalidInput);
    EXPECT_THROW(unloaded_q(3690, -0.1, 0.0), InvalidInput);
}

TEST(UnloadedQ, RoundTripProperty) {
    Gen g(3);
    for (int i = 0; i < 500; ++i) {
        const double qu = g.log_uniform(100, 1e6), k1 = g.uniform(0, 5), k2 = g.uniform(0, 5);
        const double ql = qu / (1 + k1 + k2);
        EXPECT_LT(rel_err(unloaded_q(ql, k1, k2), qu), 1e-12);
    }
}

TEST(ThermalPhotons, RoomTemperatureMode) {
    EXPECT_LT(rel_err(thermal_photons(1.4745e9, 290.0), 4097.0), 0.005);
    for (double f = 1.474e9; f <= 1.478e9 + 1; f += 0.5e6)
        EXPECT_LT(rel_err(thermal_photons(f, 290.0), 4097.0), 0.005) << f;
}

TEST(ThermalPhotons, BoltzmannTail) {
    EXPECT_LT(thermal_photons(1.474e9, 1e-3), 1e-30);
    EXPECT_GE(thermal_photons(1.474e9, 1e-3), 0.0);
}

TEST(ThermalPhotons, RayleighJeansLimit) {
    const double f = 1.4745e9, T = 290.0;
    const double x = PhysConstants::h * f / (PhysConstants::k_B * T);
    const double n = thermal_photons(f, T);
    // x/(e^x - 1) = 1 - x/2 + x^2/12 - ...
    EXPECT_LT(std::abs(n * x - 1.0), 1.3e-4);
    EXPECT_NEAR(n * x, 1.0 - x / 2.0 + x * x / 12.0, 1e-12);
}

TEST(ThermalPhotons, Errors) {
    EXPECT_THROW(thermal_photons(1e9, 0.0), InvalidInput);
    EXPECT_THROW(thermal_photons(1e9, -5.0), InvalidInput);
    EXPECT_THROW(thermal_photons(0.0, 290.0), InvalidInput);
}

TEST(ThermalPhotons, MonotoneProperty) {
    Gen g(4);
    for (int i = 0; i < 500; ++i) {
        const double f = g.log_uniform(1e8, 1e11), T = g.log_uniform(0.1, 1000);
        const double n = thermal_photons(f, T);
        EXPECT_GT(thermal_photons(f, T * 1.01), n);
        EXPECT_LT(thermal_photons(f * 1.01, T), n);
    }
}

TEST(Characterization, Invariants) {
    const auto c = CavityCharacterization::from_measurements(1.478e9, 3690, 0.20, 0.0, 290.0);
    EXPECT_LT(rel_err(c.kappa_c, 2 * std::numbers::pi * 1.478e9 / 3690), 1e-9);
    EXPECT_LT(rel_err(c.n_bar, 1.0 / std::expm1(PhysConstants::h * 1.478e9 / (PhysConstants::k_B * 290.0))), 1e-9);
    EXPECT_NEAR(c.q_unloaded(), 4428.0, 1e-9);
    EXPECT_NEAR(c.kappa_c, 2.517e6, 0.001e6);
}

TEST(PowerToPhotons, PeakOutput) {
    const double n = power_to_photons(1e-4, 0.20, 2.517e6, 1.474e9);
    // (1 + K)/K = 6 for K = 0.2
    const double by_hand = 1e-4 * 6.0 / (6.62607015e-34 * 1.474e9 * 2.517e6);
    EXPECT_LT(rel_err(n, by_hand), 1e-12);
    EXPECT_LT(rel_err(n, 2.44e14), 0.005);
}

TEST(PowerToPhotons, ZeroPowerAndErrors) {
    EXPECT_EQ(power_to_photons(0.0, 0.2, 2.517e6, 1.474e9), 0.0);
    EXPECT_THROW(power_to_photons(1e-4, 0.0, 2.517e6, 1.474e9), InvalidInput);
    EXPECT_THROW(power_to_photons(-1e-4, 0.2, 2.517e6, 1.474e9), InvalidInput);
    EXPECT_THROW(power_to_photons(1e-4, 0.2, 0.0, 1.474e9), InvalidInput);
}

TEST(PowerToPhotons, LargeCouplingLimit) {
    const double limit = 1e-4 / (PhysConstants::h * 1.474e9 * 2.517e6);
    double prev = std::numeric_limits<double>::infinity();
    for (double k = 0.01; k < 1e6; k *= 3) {
        const double n = power_to_photons(1e-4, k, 2.517e6, 1.474e9);
        EXPECT_LT(n, prev);
        EXPECT_GT(n, limit);
        prev = n;
    }
    EXPECT_LT(rel_err(prev, limit), 1e-5);
}

TEST(PowerToPhotons, LinearInPower) {
    Gen g(5);
    for (int i = 0; i < 500; ++i) {
        const double p = g.log_uniform(1e-15, 1), a = g.log_uniform(1e-3, 1e3), k = g.log_uniform(0.01, 10);
        EXPECT_LT(rel_err(power_to_photons(a * p, k, 2.5e6, 1.47e9), a * power_to_photons(p, k, 2.5e6, 1.47e9)),
                  1e-12);
    }
}

TEST(PowerToPhotons, TraceForms) {
    const TimeTrace dbm({0.0, 1e-6}, {-10.0, -70.0}, Unit::dBm);
    const auto ph = power_to_photons(dbm, 0.20, 2.517e6, 1.474e9);
    EXPECT_EQ(ph.unit(), Unit::Photons);
    EXPECT_LT(rel_err(ph.y()[0], power_to_photons(1e-4, 0.20, 2.517e6, 1.474e9)), 1e-12);
    const TimeTrace w({0.0, 1e-6}, {1e-4, 1e-10}, Unit::Watts);
    const auto pw = power_to_photons(w, 0.20, 2.517e6, 1.474e9);
    EXPECT_LT(rel_err(pw.y()[1], ph.y()[1]), 1e-12);
    EXPECT_THROW(power_to_photons(TimeTrace({0.0}, {1.0}, Unit::Volts), 0.2, 2.5e6, 1.47e9), InvalidInput);
}

TEST(BaselineCorrect, FlatTrace) {
    const TimeTrace tr(linspace(0, 1e-6, 50), std::vector<double>(50, 0.0), Unit::Photons);
    const auto bc = baseline_correct(tr, 4097.0, 1e-6);
    for (double v : bc.trace.y()) EXPECT_DOUBLE_EQ(v, 4097.0);
    EXPECT_DOUBLE_EQ(bc.shift, 4097.0);
}

TEST(BaselineCorrect, RemovesOffsetBeforeBurst) {
    Gen g(6);
    const auto t = linspace(0, 10e-6, 1001);
    std::vector<double> y(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double burst = t[i] > 2e-6 ? 1e12 * std::exp(-(t[i] - 2e-6) / 2e-6) : 0.0;
        y[i] = 4097.0 + 500.0 + burst + 20.0 * g.normal();
    }
    const TimeTrace tr(t, y, Unit::Photons);
    const auto onset = detect_burst_onset(tr);
    EXPECT_NEAR(t[onset], 2e-6, 0.02e-6);
    const auto bc = baseline_correct(tr, 4097.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < bc.window_samples; ++i) mean += bc.trace.y()[i];
    mean /= static_cast<double>(bc.window_samples);
    EXPECT_LT(rel_err(mean, 4097.0), 1e-6);
    EXPECT_NEAR(bc.shift, -500.0, 5.0);
}

TEST(BaselineCorrect, DetectorFloorIsFarAboveThermalLevel) {
    const double floor = power_to_photons(dbm_to_watts(-70.0), 0.20, 2.517e6, 1.474e9);
    EXPECT_LT(rel_err(floor, 2.44e8), 0.005);
    EXPECT_GT(floor / 4097.0, 1e4);
}

TEST(BaselineCorrect, Errors) {
    const TimeTrace tr(linspace(0, 1e-6, 50), std::vector<double>(50, 0.0), Unit::Photons);
    EXPECT_THROW(baseline_correct(tr, 4097.0, 0.0), InvalidInput);
    EXPECT_THROW(baseline_correct(tr, 4097.0, 0.1e-6), InvalidInput);  // 5 samples
    EXPECT_THROW(baseline_correct(TimeTrace({0.0}, {1.0}, Unit::Watts), 1.0, 1.0), InvalidInput);
    EXPECT_THROW(baseline_correct(tr, 4097.0), InvalidInput);  // no onset in a flat trace
}

TEST(CircleFit, RecoversNoisyCircle) {
    Gen g(8);
    const std::complex<double> c(-0.3, 0.1);
    const double r = 0.42;
    std::vector<std::complex<double>> pts;
    for (int i = 0; i < 200; ++i) {
        const double th = g.uniform(0, 2 * std::numbers::pi);
        pts.push_back(c + std::polar(r, th) + std::complex<double>(1e-4 * g.normal(), 1e-4 * g.normal()));
    }
    const auto f = fit_circle_kasa(pts);
    EXPECT_NEAR(f.center.real(), c.real(), 1e-4);
    EXPECT_NEAR(f.center.imag(), c.imag(), 1e-4);
    EXPECT_NEAR(f.diameter(), 2 * r, 2e-4);
}

TEST(CircleFit, Degenerate) {
    std::vector<std::complex<double>> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    EXPECT_THROW(fit_circle_kasa(line), InvalidInput);
    std::vector<std::complex<double>> two{{0, 0}, {1, 1}};
    EXPECT_THROW(fit_circle_kasa(two), InvalidInput);
}
