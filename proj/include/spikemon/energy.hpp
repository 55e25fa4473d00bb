#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "spikemon/error.hpp"
#include "spikemon/io.hpp"
#include "spikemon/nef/simulate.hpp"
#include "spikemon/pipeline/filter.hpp"

namespace spikemon::energy {

struct OpCounts {
    std::uint64_t synaptic_ops = 0;
    std::uint64_t neuron_updates = 0;
    std::uint64_t inference_steps = 0;
};

// Outgoing connections per neuron.
struct Topology {
    std::vector<std::uint64_t> fan_out;

    std::size_t n_neurons() const { return fan_out.size(); }
};

// Fan-out for a filter run: every neuron of stage k projects to all neurons of
// stage k + 1; the last stage projects to the single decoded output.
inline Topology topology_of(const FilterRun& run) {
    Topology t;
    t.fan_out.resize(run.total_neurons, 1);
    for (std::size_t k = 0; k + 1 < run.stage_offsets.size(); ++k) {
        const auto next_size = (k + 2 < run.stage_offsets.size() ? run.stage_offsets[k + 2] : run.total_neurons) -
                               run.stage_offsets[k + 1];
        for (auto i = run.stage_offsets[k]; i < run.stage_offsets[k + 1]; ++i) t.fan_out[i] = next_size;
    }
    return t;
}

inline OpCounts count_ops(const nef::SpikeRaster& raster, const Topology& topo, std::uint64_t steps) {
    OpCounts c;
    for (const auto& ev : raster.events) {
        if (ev.neuron >= topo.n_neurons())
            throw InputError("count_ops: raster neuron " + std::to_string(ev.neuron) + " not in topology");
        if (ev.step >= steps) throw InputError("count_ops: raster event beyond the inference length");
        c.synaptic_ops += topo.fan_out[ev.neuron];
    }
    c.neuron_updates = static_cast<std::uint64_t>(topo.n_neurons()) * steps;
    c.inference_steps = steps;
    return c;
}

inline OpCounts count_ops(const FilterRun& run) { return count_ops(run.raster, topology_of(run), run.raster.steps); }

// Per-operation energies in joules.
struct HardwareEnergyProfile {
    std::string name;
    double e_synop = 0.0;
    double e_update = 0.0;
    double e_static_per_inference = 0.0;

    void validate() const {
        if (!(e_synop >= 0.0) || !(e_update >= 0.0) || !(e_static_per_inference >= 0.0))
            throw ConfigError("energy profile '" + name + "': energies must be non-negative");
    }
};

// Energy per inference in microjoules.
inline double estimate_energy(const OpCounts& c, const HardwareEnergyProfile& p) {
    p.validate();
    const double joules = static_cast<double>(c.synaptic_ops) * p.e_synop +
                          static_cast<double>(c.neuron_updates) * p.e_update + p.e_static_per_inference;
    return joules * 1e6;
}

// Reference energies [uJ/inference] for the 66 % / 7-layer PD1 sample.
struct ReferenceTarget {
    const char* name;
    double microjoules;
    bool spike_driven;
};

inline constexpr ReferenceTarget kReferenceTargets[] = {
    {"CPU", 17.2, false}, {"GPU", 0.6, false}, {"FPGA", 1.8, false}, {"Loihi", 0.821, true}, {"SpiNNaker2", 22.1, true},
};

// Calibrated, not measured: dense hardware is priced as a flat per-inference cost,
// neuromorphic hardware per synaptic operation, each scaled so that `reference`
// reproduces its target.
inline std::vector<HardwareEnergyProfile> reference_profiles(const OpCounts& reference) {
    if (reference.synaptic_ops == 0) throw NumericError("energy: reference run produced no synaptic operations");
    std::vector<HardwareEnergyProfile> out;
    for (const auto& t : kReferenceTargets) {
        HardwareEnergyProfile p;
        p.name = t.name;
        if (t.spike_driven)
            p.e_synop = t.microjoules * 1e-6 / static_cast<double>(reference.synaptic_ops);
        else
            p.e_static_per_inference = t.microjoules * 1e-6;
        out.push_back(p);
    }
    return out;
}

inline void to_json(nlohmann::json& j, const HardwareEnergyProfile& p) {
    j = nlohmann::json{{"name", p.name},
                       {"e_synop", p.e_synop},
                       {"e_update", p.e_update},
                       {"e_static_per_inference", p.e_static_per_inference}};
}

inline std::vector<HardwareEnergyProfile> profiles_from_json(const nlohmann::json& j) {
    try {
        const auto& list = j.is_object() && j.contains("profiles") ? j.at("profiles") : j;
        if (!list.is_array()) throw ConfigError("energy profiles: expected an array");
        std::vector<HardwareEnergyProfile> out;
        for (const auto& e : list) {
            HardwareEnergyProfile p;
            p.name = e.at("name").get<std::string>();
            p.e_synop = e.value("e_synop", 0.0);
            p.e_update = e.value("e_update", 0.0);
            p.e_static_per_inference = e.value("e_static_per_inference", 0.0);
            p.validate();
            out.push_back(p);
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("energy profiles: ") + e.what());
    }
}

struct EnergyRow {
    std::string sample;
    OpCounts counts;
    std::vector<double> microjoules;  // one per profile
};

inline std::string format_energy_csv(const std::vector<HardwareEnergyProfile>& profiles,
                                     const std::vector<EnergyRow>& rows, const std::vector<std::string>& comments = {}) {
    std::ostringstream out;
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "sample";
    for (const auto& p : profiles) out << ',' << p.name;
    out << ",synaptic_ops,neuron_updates\n";
    for (const auto& r : rows) {
        out << r.sample;
        for (double e : r.microjoules) out << ',' << fmt_num(e, 6);
        out << ',' << r.counts.synaptic_ops << ',' << r.counts.neuron_updates << '\n';
    }
    return out.str();
}

}  // namespace spikemon::energy
