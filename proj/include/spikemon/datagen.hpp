#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>

#include "spikemon/error.hpp"
#include "spikemon/pipeline/series.hpp"

namespace spikemon {

// Synthetic per-layer photodiode means: baseline + periodic junction spikes + gaussian noise.
struct GenParams {
    int layer_first = 570;
    int layer_last = 650;
    double baseline_level = 1000.0;
    double noise_std = 20.0;
    double junction_spike_amplitude = 600.0;
    int junction_period = 8;
    std::uint64_t seed = 0;
    Sensor sensor = Sensor::PD1;
    PatchLocation patch_location = PatchLocation::BL;

    // Noise level for a sensor: PD1 is the clean channel, PD2/BD noisier.
    static GenParams for_sensor(Sensor s, std::uint64_t seed = 0) {
        GenParams p;
        p.sensor = s;
        p.noise_std = s == Sensor::PD1 ? 20.0 : 60.0;
        p.seed = seed;
        return p;
    }

    void validate() const {
        if (layer_last < layer_first) throw ConfigError("datagen: empty layer range");
        if (!(baseline_level > 0.0)) throw ConfigError("datagen: baseline_level must be positive");
        if (!(noise_std >= 0.0)) throw ConfigError("datagen: noise_std must be non-negative");
        if (junction_period < 1) throw ConfigError("datagen: junction_period must be >= 1");
        if (!(junction_spike_amplitude >= 0.0)) throw ConfigError("datagen: junction amplitude must be non-negative");
    }
};

struct DefectSpec {
    int start_layer = 613;
    int n_layers = 7;
    double power_reduction_percent = 66.0;
    double dip_fraction = 1.0;

    double depth() const { return dip_fraction * power_reduction_percent / 100.0; }

    std::set<int> layers() const {
        std::set<int> out;
        for (int l = start_layer; l < start_layer + n_layers; ++l) out.insert(l);
        return out;
    }

    void validate(const GenParams& p) const {
        if (n_layers < 1) throw ConfigError("datagen: defect needs at least one layer");
        if (start_layer < p.layer_first || start_layer + n_layers - 1 > p.layer_last)
            throw ConfigError("datagen: defect layers fall outside the series window");
        if (power_reduction_percent < 0.0 || power_reduction_percent > 100.0)
            throw ConfigError("datagen: power reduction must be within [0, 100]");
        if (!(dip_fraction >= 0.0) || depth() > 1.0) throw ConfigError("datagen: dip_fraction * reduction exceeds 1");
    }
};

namespace detail {

// Baseline + junction term and the noise draw for every layer, in layer order.
inline SignalSeries generate(const GenParams& p, const DefectSpec* defect) {
    p.validate();
    if (defect) defect->validate(p);

    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> noise(0.0, p.noise_std > 0.0 ? p.noise_std : 1.0);

    SignalSeries s;
    s.sensor = p.sensor;
    s.condition = defect ? Condition::Defective : Condition::Healthy;
    s.metadata.patch_location = p.patch_location;
    if (defect) {
        s.metadata.power_reduction_percent = defect->power_reduction_percent;
        s.metadata.defect_layer_count = defect->n_layers;
    }
    for (int l = p.layer_first; l <= p.layer_last; ++l) {
        double v = p.baseline_level;
        if (l % p.junction_period == 0) v += p.junction_spike_amplitude;
        const double n = noise(rng);
        if (p.noise_std > 0.0) v += n;
        if (defect && l >= defect->start_layer && l < defect->start_layer + defect->n_layers)
            v -= p.baseline_level * defect->depth();
        s.values.emplace(l, std::max(0.0, v));
    }
    return s;
}

}  // namespace detail

inline SignalSeries gen_healthy(const GenParams& p) { return detail::generate(p, nullptr); }

// Same draws as gen_healthy(p); defect layers lose baseline * dip_fraction * reduction.
inline SignalSeries gen_defective(const GenParams& p, const DefectSpec& d) { return detail::generate(p, &d); }

}  // namespace spikemon
