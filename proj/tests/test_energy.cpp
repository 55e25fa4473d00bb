#include <gtest/gtest.h>

#include "spikemon/energy.hpp"
#include "spikemon/error.hpp"

using namespace spikemon;
using namespace spikemon::energy;

TEST(OpCounting, EmptyRaster) {
    nef::SpikeRaster r;
    const auto c = count_ops(r, Topology{std::vector<std::uint64_t>(8, 3)}, 100);
    EXPECT_EQ(c.synaptic_ops, 0u);
    EXPECT_EQ(c.neuron_updates, 800u);
    EXPECT_EQ(c.inference_steps, 100u);
}

TEST(OpCounting, TenSpikesUnitFanOut) {
    nef::SpikeRaster r;
    for (std::uint32_t i = 0; i < 10; ++i) r.events.push_back({i % 4, i});
    EXPECT_EQ(count_ops(r, Topology{std::vector<std::uint64_t>(4, 1)}, 10).synaptic_ops, 10u);
}

TEST(OpCounting, FanOutWeightsSpikes) {
    nef::SpikeRaster r;
    r.events = {{0, 0}, {0, 1}, {1, 1}, {2, 5}};
    // 250 + 250 + 250 + 1
    EXPECT_EQ(count_ops(r, Topology{{250, 250, 1}}, 6).synaptic_ops, 751u);
}

TEST(OpCounting, RejectsInconsistentRaster) {
    nef::SpikeRaster r;
    r.events = {{5, 0}};
    EXPECT_THROW(count_ops(r, Topology{{1, 1}}, 10), InputError);
    r.events = {{0, 10}};
    EXPECT_THROW(count_ops(r, Topology{{1, 1}}, 10), InputError);
}

TEST(OpCounting, CascadeTopology) {
    FilterConfig cfg;
    cfg.stages = 2;
    cfg.neurons = 40;
    SignalSeries s;
    for (int l = 0; l < 5; ++l) s.values[l] = 700.0;
    const auto run = run_filter(s, cfg, build_stage_ensembles(cfg));
    const auto t = topology_of(run);
    ASSERT_EQ(t.n_neurons(), 40u);
    EXPECT_EQ(t.fan_out[0], 20u);
    EXPECT_EQ(t.fan_out[19], 20u);
    EXPECT_EQ(t.fan_out[20], 1u);
    const auto c = count_ops(run);
    EXPECT_EQ(c.neuron_updates, 40u * run.raster.steps);
    EXPECT_GT(c.synaptic_ops, run.raster.events.size());
}

TEST(EnergyEstimate, StaticOnlyWhenCountsZero) {
    HardwareEnergyProfile p{"x", 1e-12, 2e-12, 3e-6};
    EXPECT_DOUBLE_EQ(estimate_energy(OpCounts{}, p), 3.0);
}

TEST(EnergyEstimate, MillionSynopsAtPointEightPicojoule) {
    HardwareEnergyProfile p{"x", 0.8e-12, 0.0, 0.0};
    OpCounts c;
    c.synaptic_ops = 1'000'000;
    EXPECT_NEAR(estimate_energy(c, p), 0.8, 1e-12);
}

TEST(EnergyEstimate, RejectsNegativeEnergies) {
    HardwareEnergyProfile p{"x", -1.0, 0.0, 0.0};
    EXPECT_THROW(estimate_energy(OpCounts{}, p), ConfigError);
}

TEST(ReferenceProfiles, ReproduceTargetsOnReference) {
    OpCounts ref;
    ref.synaptic_ops = 123'456;
    ref.neuron_updates = 500 * 810;
    const auto profiles = reference_profiles(ref);
    ASSERT_EQ(profiles.size(), 5u);
    const double targets[] = {17.2, 0.6, 1.8, 0.821, 22.1};
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(estimate_energy(ref, profiles[k]), targets[k], 1e-9);
    // Spike-driven profiles scale with activity, static ones do not.
    OpCounts more = ref;
    more.synaptic_ops *= 2;
    EXPECT_NEAR(estimate_energy(more, profiles[3]), 2 * 0.821, 1e-9);
    EXPECT_NEAR(estimate_energy(more, profiles[0]), 17.2, 1e-9);
    EXPECT_THROW(reference_profiles(OpCounts{}), NumericError);
}

TEST(ReferenceProfiles, JsonRoundTrip) {
    OpCounts ref;
    ref.synaptic_ops = 1000;
    const auto profiles = reference_profiles(ref);
    nlohmann::json j = profiles;
    const auto back = profiles_from_json(j);
    ASSERT_EQ(back.size(), profiles.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        EXPECT_EQ(back[k].name, profiles[k].name);
        EXPECT_EQ(back[k].e_synop, profiles[k].e_synop);
        EXPECT_EQ(back[k].e_static_per_inference, profiles[k].e_static_per_inference);
    }
    EXPECT_EQ(profiles_from_json(nlohmann::json{{"profiles", j}}).size(), 5u);
    EXPECT_THROW(profiles_from_json(nlohmann::json{{{"e_synop", 1.0}}}), ConfigError);
    EXPECT_THROW(profiles_from_json(nlohmann::json{{{"name", "a"}, {"e_synop", -1.0}}}), ConfigError);
}

TEST(EnergyCsv, Layout) {
    const std::vector<HardwareEnergyProfile> profiles = {{"A", 0, 0, 1e-6}, {"B", 1e-9, 0, 0}};
    EnergyRow row;
    row.sample = "S1V3";
    row.counts.synaptic_ops = 10;
    row.counts.neuron_updates = 20;
    row.microjoules = {1.0, 0.01};
    EXPECT_EQ(format_energy_csv(profiles, {row}, {"m"}), "# m\nsample,A,B,synaptic_ops,neuron_updates\nS1V3,1,0.01,10,20\n");
}
