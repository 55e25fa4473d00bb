#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "spikemon/error.hpp"
#include "spikemon/nef/lif.hpp"

using namespace spikemon;
using namespace spikemon::nef;

namespace {

// Forward-Euler membrane integration with a hard refractory hold. Counts spikes
// after the first one so start-up transients do not bias the rate.
double euler_rate(double j, double dt, double duration, const LifParams& p = {}) {
    double v = 0.0, hold = 0.0, first = -1.0, last = -1.0;
    long spikes = 0;
    const long steps = static_cast<long>(std::llround(duration / dt));
    for (long k = 0; k < steps; ++k) {
        if (hold > 0.0) {
            hold -= dt;
            continue;
        }
        v += dt * (j - v) / p.tau_rc;
        if (v >= 1.0) {
            const double t = static_cast<double>(k) * dt;
            if (first < 0.0) first = t;
            last = t;
            ++spikes;
            v = 0.0;
            hold = p.tau_ref;
        }
    }
    return spikes > 1 ? static_cast<double>(spikes - 1) / (last - first) : 0.0;
}

long count_spikes(double j, double dt, double duration, const LifParams& p = {}) {
    LifState s;
    long n = 0;
    const long steps = static_cast<long>(std::llround(duration / dt));
    for (long k = 0; k < steps; ++k) {
        auto r = lif_step(s, j, dt, p);
        s = r.state;
        n += r.spiked;
    }
    return n;
}

}  // namespace

TEST(LifRate, SubthresholdDriveIsSilent) {
    const LifParams p;
    EXPECT_EQ(lif_rate(1.0, p), 0.0);
    EXPECT_EQ(lif_rate(0.3, p), 0.0);
    EXPECT_EQ(lif_rate(-5.0, p), 0.0);
}

TEST(LifRate, LargeDriveApproachesRefractoryLimit) {
    const LifParams p;
    EXPECT_NEAR(lif_rate(1e9, p), 1.0 / p.tau_ref, 1e-3);
    EXPECT_LT(lif_rate(1e9, p), 1.0 / p.tau_ref);
}

TEST(LifRate, DriveOfTwoMatchesEulerSpikeCount) {
    const LifParams p;
    const double closed = lif_rate(2.0, p);
    EXPECT_NEAR(closed, 63.04, 0.01);
    const double oracle = euler_rate(2.0, 1e-6, 2.0, p);
    EXPECT_NEAR(oracle, closed, 0.01 * closed);
}

TEST(LifRate, NonFiniteDriveIsRejected) {
    EXPECT_THROW(lif_rate(std::numeric_limits<double>::quiet_NaN(), {}), InputError);
    EXPECT_THROW(lif_rate(std::numeric_limits<double>::infinity(), {}), InputError);
}

TEST(LifRate, MonotoneInDrive) {
    const LifParams p;
    double prev = 0.0;
    for (double j = 1.01; j < 20.0; j += 0.37) {
        const double r = lif_rate(j, p);
        EXPECT_GT(r, prev);
        prev = r;
    }
}

TEST(LifRate, CurrentForRateInvertsRate) {
    const LifParams p;
    for (double rate : {5.0, 63.04, 200.0, 400.0, 490.0}) {
        const double j = lif_current_for_rate(rate, p);
        EXPECT_NEAR(lif_rate(j, p), rate, 1e-9 * rate);
    }
    EXPECT_THROW(lif_current_for_rate(500.0, p), ConfigError);
    EXPECT_THROW(lif_current_for_rate(0.0, p), ConfigError);
}

TEST(LifRate, NormalizedCurrentScalesByLeakAndThreshold) {
    LifParams p;
    p.g_l = 2.0;
    p.v_th = 1.5;
    p.e_l = 0.5;
    EXPECT_DOUBLE_EQ(normalized_current(3.0, p), 1.5);
}

TEST(LifStep, LeakDecaysTowardRest) {
    const LifParams p;
    LifState s{0.7, 0.0};
    const double dt = 0.001;
    auto r = lif_step(s, 0.0, dt, p);
    EXPECT_FALSE(r.spiked);
    EXPECT_NEAR(r.state.v, 0.7 * std::exp(-dt / p.tau_rc), 1e-15);
}

TEST(LifStep, ThresholdCrossingResets) {
    const LifParams p;
    LifState s{0.999, 0.0};
    auto r = lif_step(s, 50.0, 0.001, p);
    EXPECT_TRUE(r.spiked);
    EXPECT_EQ(r.state.v, p.e_l);
    EXPECT_GT(r.state.refractory_remaining, 0.0);
    EXPECT_LE(r.state.refractory_remaining, p.tau_ref);
}

TEST(LifStep, HoldsAtRestDuringRefractoryPeriod) {
    const LifParams p;
    LifState s{0.0, p.tau_ref};
    const double dt = 0.0005;
    // Fully refractory for the first tau_ref / dt steps regardless of drive.
    for (int k = 0; k < 4; ++k) {
        auto r = lif_step(s, 100.0, dt, p);
        EXPECT_FALSE(r.spiked);
        EXPECT_EQ(r.state.v, 0.0);
        s = r.state;
    }
    EXPECT_EQ(s.refractory_remaining, 0.0);
    // Sub-threshold drive so the first free step charges without spiking.
    EXPECT_GT(lif_step(s, 1.5, dt, p).state.v, 0.0);
}

TEST(LifStep, VoltageNeverDropsBelowRest) {
    const LifParams p;
    LifState s{0.2, 0.0};
    for (int k = 0; k < 100; ++k) {
        s = lif_step(s, -10.0, 0.001, p).state;
        EXPECT_GE(s.v, p.e_l);
    }
}

TEST(LifStep, ConstantDriveForOneSecondMatchesRate) {
    const long n = count_spikes(2.0, 0.001, 1.0);
    EXPECT_LE(std::abs(static_cast<double>(n) - lif_rate(2.0, {})), 1.0);
}

TEST(LifStep, RateIsAccurateAtCoarseSteps) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> draw(1.05, 12.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double j = draw(rng);
        const double expected = lif_rate(j, {});
        const double measured = static_cast<double>(count_spikes(j, 0.001, 10.0)) / 10.0;
        EXPECT_NEAR(measured, expected, 0.01 * expected + 0.1) << "j=" << j;
    }
}

TEST(LifStep, AgreesWithEulerOracleAcrossDrives) {
    for (double j : {1.2, 1.8, 3.0, 6.5}) {
        const double oracle = euler_rate(j, 1e-6, 1.0);
        const double stepped = static_cast<double>(count_spikes(j, 1e-4, 20.0)) / 20.0;
        EXPECT_NEAR(stepped, oracle, 0.01 * oracle) << "j=" << j;
    }
}

TEST(LifStep, RejectsNonFiniteInputs) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(lif_step({}, nan, 0.001, {}), InputError);
    EXPECT_THROW(lif_step({nan, 0.0}, 1.0, 0.001, {}), InputError);
    EXPECT_THROW(lif_step({}, 1.0, 0.0, {}), InputError);
}

TEST(LifParams, ValidateRejectsBadValues) {
    LifParams p;
    p.tau_rc = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.v_th = p.e_l;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.tau_ref = -1.0;
    EXPECT_THROW(p.validate(), ConfigError);
}
