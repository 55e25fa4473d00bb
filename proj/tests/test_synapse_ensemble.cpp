#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "spikemon/error.hpp"
#include "spikemon/nef/ensemble.hpp"
#include "spikemon/nef/simulate.hpp"
#include "spikemon/nef/synapse.hpp"

using namespace spikemon;
using namespace spikemon::nef;

namespace {

const Ensemble& standard_ensemble() {
    static const Ensemble e = build_ensemble(EnsembleConfig{}, 3);
    return e;
}

double steady_decoded(const Ensemble& e, double x, double tau = 0.005) {
    const std::vector<double> input(500, x);
    const auto r = simulate_filter(e, input, 0.001, tau, tau);
    return std::accumulate(r.decoded.begin() + 200, r.decoded.end(), 0.0) / 300.0;
}

// RMSE of A^T d against the identity on a grid that avoids the solver's sample points.
double held_out_rmse(const Ensemble& e) {
    std::vector<double> xs;
    for (int k = 0; k < 377; ++k) xs.push_back(-e.radius + (k + 0.5) * 2.0 * e.radius / 377.0);
    double sq = 0.0;
    for (double x : xs) {
        double y = 0.0;
        for (std::size_t i = 0; i < e.n_neurons; ++i) {
            const auto& t = e.tunings[i];
            const double j = t.gain * t.encoder * x / e.radius + t.bias;
            const double rate = j > 1.0 ? 1.0 / (e.lif.tau_ref + e.lif.tau_rc * std::log(1.0 + 1.0 / (j - 1.0))) : 0.0;
            y += e.decoders[i] * rate;
        }
        sq += (y - x) * (y - x);
    }
    return std::sqrt(sq / static_cast<double>(xs.size()));
}

}  // namespace

TEST(Synapse, ImpulseResponseIsGeometric) {
    const double dt = 0.001, tau = 0.004;
    const double a = std::exp(-dt / tau);
    SynapseState s{tau, 0.0};
    for (int k = 0; k < 100; ++k) {
        s = synapse_step(s, k == 0 ? 1.0 : 0.0, dt);
        EXPECT_NEAR(s.y, (1.0 - a) * std::pow(a, k), 1e-12);
    }
}

TEST(Synapse, UnitDcGainAfterTenTimeConstants) {
    for (double tau : {0.001, 0.003, 0.02}) {
        const double dt = 0.001, c = 437.0;
        LowPass lp(tau, dt);
        const int n = std::max(1, static_cast<int>(std::ceil(10.0 * tau / dt)));
        for (int k = 0; k < n; ++k) lp.step(c);
        EXPECT_NEAR(lp.value(), c, 1e-3 * c) << "tau=" << tau;
    }
}

TEST(Synapse, IsLinear) {
    const double dt = 0.001, tau = 0.005;
    LowPass a(tau, dt), b(tau, dt), ab(tau, dt);
    for (int k = 0; k < 50; ++k) {
        const double x1 = std::sin(0.3 * k), x2 = (k % 7) - 3.0;
        const double y = ab.step(2.5 * x1 - 1.5 * x2);
        EXPECT_NEAR(y, 2.5 * a.step(x1) - 1.5 * b.step(x2), 1e-12);
    }
}

TEST(Synapse, MatchesContinuousFilterForHeldInput) {
    // tau y' = x - y integrated with RK4 at dt/1000, input held constant across each step.
    const double dt = 0.001, tau = 0.003;
    LowPass lp(tau, dt);
    double y = 0.0;
    const int sub = 1000;
    const double h = dt / sub;
    for (int k = 0; k < 40; ++k) {
        const double x = k < 15 ? 100.0 : -30.0 + k;
        auto f = [&](double v) { return (x - v) / tau; };
        for (int s = 0; s < sub; ++s) {
            const double k1 = f(y), k2 = f(y + 0.5 * h * k1), k3 = f(y + 0.5 * h * k2), k4 = f(y + h * k3);
            y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        EXPECT_NEAR(lp.step(x), y, 1e-9);
    }
}

TEST(Synapse, StepAndLowPassAgree) {
    SynapseState s{0.006, 2.0};
    LowPass lp(0.006, 0.001, 2.0);
    for (int k = 0; k < 20; ++k) {
        s = synapse_step(s, k * 1.5, 0.001);
        EXPECT_DOUBLE_EQ(s.y, lp.step(k * 1.5));
    }
}

TEST(Synapse, RejectsBadParameters) {
    EXPECT_THROW(synapse_decay(0.0, 0.001), ConfigError);
    EXPECT_THROW(synapse_decay(-1.0, 0.001), ConfigError);
    EXPECT_THROW(synapse_step({0.005, 0.0}, std::numeric_limits<double>::quiet_NaN(), 0.001), InputError);
}

TEST(Ensemble, SameSeedSameEnsemble) {
    EnsembleConfig cfg;
    cfg.n_neurons = 80;
    const auto a = build_ensemble(cfg, 11), b = build_ensemble(cfg, 11), c = build_ensemble(cfg, 12);
    ASSERT_EQ(a.tunings.size(), b.tunings.size());
    for (std::size_t i = 0; i < a.tunings.size(); ++i) {
        EXPECT_EQ(a.tunings[i].gain, b.tunings[i].gain);
        EXPECT_EQ(a.tunings[i].bias, b.tunings[i].bias);
        EXPECT_EQ(a.tunings[i].encoder, b.tunings[i].encoder);
    }
    EXPECT_EQ(a.decoders, b.decoders);
    EXPECT_NE(a.decoders, c.decoders);
}

TEST(Ensemble, TuningHitsInterceptAndMaxRate) {
    const auto& e = standard_ensemble();
    for (std::size_t i = 0; i < e.n_neurons; ++i) {
        const auto& t = e.tunings[i];
        EXPECT_TRUE(t.encoder == 1.0 || t.encoder == -1.0);
        EXPECT_GE(t.intercept, -0.95);
        EXPECT_LE(t.intercept, 0.95);
        EXPECT_NEAR(e.drive(i, t.encoder * t.intercept * e.radius), 1.0, 1e-9);
        EXPECT_NEAR(lif_rate(e.drive(i, t.encoder * e.radius), e.lif), t.max_rate, 1e-6 * t.max_rate);
    }
}

TEST(Ensemble, SpikeCountsMatchTuningCurves) {
    const auto& e = standard_ensemble();
    const std::vector<double> xs = {-700.0, 0.0, 550.0};
    const auto rates = tuning_curves(e, xs);
    const double dt = 0.001, duration = 2.0;
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t k = 0; k < xs.size(); ++k) {
            LifState s;
            int n = 0;
            for (int step = 0; step < static_cast<int>(duration / dt); ++step) {
                auto r = lif_step(s, e.drive(i, xs[k]), dt, e.lif);
                s = r.state;
                n += r.spiked;
            }
            const double expected = rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
            EXPECT_NEAR(n / duration, expected, 0.01 * expected + 1.0 / duration) << "neuron " << i;
        }
    }
}

TEST(Ensemble, SubthresholdRowsAreZero) {
    const auto& e = standard_ensemble();
    const std::vector<double> far_below = {-e.radius};
    const auto a = tuning_curves(e, far_below);
    for (std::size_t i = 0; i < e.n_neurons; ++i) {
        if (e.tunings[i].encoder > 0) EXPECT_EQ(a(static_cast<Eigen::Index>(i), 0), 0.0);
    }
}

TEST(Ensemble, NegativeInterceptFiresAtZero) {
    const auto& e = standard_ensemble();
    const std::vector<double> zero = {0.0};
    const auto a = tuning_curves(e, zero);
    int checked = 0;
    for (std::size_t i = 0; i < e.n_neurons; ++i)
        if (e.tunings[i].encoder > 0 && e.tunings[i].intercept < -0.01) {
            EXPECT_GT(a(static_cast<Eigen::Index>(i), 0), 0.0);
            ++checked;
        }
    EXPECT_GT(checked, 0);
}

TEST(Ensemble, RejectsUnreachableRatesAndEmptyRanges) {
    EnsembleConfig cfg;
    cfg.max_rate_high = 600.0;
    EXPECT_THROW(build_ensemble(cfg, 0), ConfigError);
    cfg = {};
    cfg.intercept_low = 0.5;
    cfg.intercept_high = 0.1;
    EXPECT_THROW(build_ensemble(cfg, 0), ConfigError);
    cfg = {};
    cfg.n_neurons = 0;
    EXPECT_THROW(build_ensemble(cfg, 0), ConfigError);
}

TEST(Decoders, ZeroTargetGivesZeroDecoders) {
    const auto& e = standard_ensemble();
    const auto d = solve_decoders(e, [](double) { return 0.0; }, 200, 0.1);
    for (double v : d) EXPECT_EQ(v, 0.0);
}

TEST(Decoders, HeavyRegularizationShrinksDecoders) {
    const auto& e = standard_ensemble();
    auto norm = [](const std::vector<double>& d) { return std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0)); };
    const auto identity = [](double x) { return x; };
    const double n1 = norm(solve_decoders(e, identity, 200, 0.1));
    const double n2 = norm(solve_decoders(e, identity, 200, 10.0));
    const double n3 = norm(solve_decoders(e, identity, 200, 1000.0));
    EXPECT_LT(n2, n1);
    EXPECT_LT(n3, 1e-3 * n1);
}

TEST(Decoders, IdentityDecodeWithinFivePercentOfRadius) {
    const auto& e = standard_ensemble();
    EXPECT_LE(held_out_rmse(e), 0.05 * e.radius);
    std::vector<double> xs;
    for (int k = -20; k <= 20; ++k) xs.push_back(k * 50.0);
    const auto y = decode_static(e, xs);
    for (std::size_t k = 0; k < xs.size(); ++k) EXPECT_NEAR(y[k], xs[k], 0.05 * e.radius);
}

TEST(Decoders, MoreNeuronsDecodeBetter) {
    EnsembleConfig small;
    small.n_neurons = 50;
    EXPECT_LT(held_out_rmse(standard_ensemble()), held_out_rmse(build_ensemble(small, 3)));
}

TEST(Simulate, ZeroInputDecodesNearZero) {
    EXPECT_LE(std::abs(steady_decoded(standard_ensemble(), 0.0)), 0.02 * 1100.0);
}

TEST(Simulate, HalfRadiusDecodesWithinFivePercent) {
    EXPECT_NEAR(steady_decoded(standard_ensemble(), 550.0), 550.0, 0.05 * 550.0);
}

TEST(Simulate, SaturatesBeyondRadius) {
    const auto& e = standard_ensemble();
    const double at_r = steady_decoded(e, e.radius), at_2r = steady_decoded(e, 2.0 * e.radius);
    EXPECT_NEAR(at_2r, at_r, 0.1 * at_r);
    const double at_3r = steady_decoded(e, 3.0 * e.radius);
    EXPECT_LE(at_3r, 1.1 * e.radius);
}

TEST(Simulate, DeterministicRasterAndOutput) {
    const auto& e = standard_ensemble();
    std::vector<double> input;
    for (int k = 0; k < 300; ++k) input.push_back(800.0 * std::sin(0.05 * k));
    const auto a = simulate_filter(e, input, 0.001, 0.003, 0.003);
    const auto b = simulate_filter(e, input, 0.001, 0.003, 0.003);
    EXPECT_EQ(a.decoded, b.decoded);
    ASSERT_EQ(a.raster.events.size(), b.raster.events.size());
    for (std::size_t i = 0; i < a.raster.events.size(); ++i) {
        EXPECT_EQ(a.raster.events[i].neuron, b.raster.events[i].neuron);
        EXPECT_EQ(a.raster.events[i].step, b.raster.events[i].step);
    }
    EXPECT_EQ(a.raster.steps, input.size());
    EXPECT_DOUBLE_EQ(a.raster.duration(), 0.3);
}

TEST(Simulate, SpikeCountsSumToEvents) {
    const auto& e = standard_ensemble();
    const std::vector<double> input(100, 300.0);
    const auto r = simulate_filter(e, input, 0.001, 0.003, 0.003);
    const auto counts = spike_counts(r.raster, e.n_neurons);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}), r.raster.events.size());
    EXPECT_THROW(spike_counts(r.raster, 1), InputError);
}

TEST(Simulate, ActivityWindowAveragesFilteredRates) {
    const auto& e = standard_ensemble();
    const std::vector<double> input(400, 500.0);
    const auto r = simulate_filter(e, input, 0.001, 0.003, 0.003, {200, 400});
    ASSERT_EQ(r.mean_activity.size(), e.n_neurons);
    const std::vector<double> x = {500.0};
    const auto rates = tuning_curves(e, x);
    for (std::size_t i = 0; i < e.n_neurons; ++i) {
        const double expected = rates(static_cast<Eigen::Index>(i), 0);
        EXPECT_NEAR(r.mean_activity[i], expected, 0.05 * expected + 12.0);
    }
    EXPECT_THROW(simulate_filter(e, input, 0.001, 0.003, 0.003, {200, 500}), InputError);
}

TEST(Simulate, RejectsMismatchedEnsemble) {
    Ensemble bad = standard_ensemble();
    bad.decoders.pop_back();
    const std::vector<double> input(10, 0.0);
    EXPECT_THROW(simulate_filter(bad, input, 0.001, 0.003, 0.003), ConfigError);
}
