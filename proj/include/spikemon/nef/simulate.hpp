#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "spikemon/error.hpp"
#include "spikemon/nef/ensemble.hpp"
#include "spikemon/nef/lif.hpp"
#include "spikemon/nef/synapse.hpp"

namespace spikemon::nef {

struct SpikeEvent {
    std::uint32_t neuron = 0;
    std::uint64_t step = 0;
};

struct SpikeRaster {
    std::vector<SpikeEvent> events;  // ordered by step, then neuron
    double dt = 0.001;
    std::uint64_t steps = 0;

    double duration() const { return static_cast<double>(steps) * dt; }
    double time(const SpikeEvent& ev) const { return static_cast<double>(ev.step) * dt; }
};

// Steps [begin, end) over which per-neuron filtered activity is averaged.
struct ActivityWindow {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool empty() const { return end <= begin; }
};

struct SimulationResult {
    std::vector<double> decoded;  // one value per step
    SpikeRaster raster;
    std::vector<double> mean_activity;  // per neuron [Hz]; empty unless a window was requested
};

// Input synapse -> LIF population -> output synapse -> linear decode, advanced one step at a time.
// Decoding the summed spike train and then filtering is used in place of filtering every
// neuron and then decoding; both are the same linear map.
class FilterNetwork {
public:
    FilterNetwork(const Ensemble& e, double dt, double tau_in, double tau_out)
        : ens_(&e), dt_(dt), input_(tau_in, dt), output_(tau_out, dt), tau_out_(tau_out), states_(e.n_neurons) {
        if (e.tunings.size() != e.n_neurons || e.decoders.size() != e.n_neurons)
            throw ConfigError("simulate: ensemble tunings/decoders do not match n_neurons");
        spike_amplitude_ = e.lif.i_spk / dt;
    }

    // Advances one step; indices of spiking neurons are appended to `spiked`.
    double step(double x, std::vector<std::uint32_t>& spiked) {
        if (!std::isfinite(x)) throw InputError("simulate: non-finite input");
        const double u = input_.step(x);
        double drive_sum = 0.0;
        for (std::size_t i = 0; i < states_.size(); ++i) {
            const auto r = lif_step(states_[i], ens_->drive(i, u), dt_, ens_->lif);
            states_[i] = r.state;
            if (r.spiked) {
                spiked.push_back(static_cast<std::uint32_t>(i));
                drive_sum += ens_->decoders[i] * spike_amplitude_;
            }
        }
        return output_.step(drive_sum);
    }

    double spike_amplitude() const { return spike_amplitude_; }
    double tau_out() const { return tau_out_; }

private:
    const Ensemble* ens_;
    double dt_;
    LowPass input_;
    LowPass output_;
    double tau_out_;
    std::vector<LifState> states_;
    double spike_amplitude_ = 0.0;
};

inline SimulationResult simulate_filter(const Ensemble& e, std::span<const double> input, double dt, double tau_in,
                                        double tau_out, ActivityWindow window = {}) {
    if (!(dt > 0.0)) throw ConfigError("simulate: dt must be positive");
    if (!(tau_in > 0.0) || !(tau_out > 0.0)) throw ConfigError("simulate: synaptic time constants must be positive");

    FilterNetwork net(e, dt, tau_in, tau_out);
    SimulationResult res;
    res.decoded.reserve(input.size());
    res.raster.dt = dt;
    res.raster.steps = input.size();

    const bool track = !window.empty();
    if (track && window.end > input.size()) throw InputError("simulate: activity window exceeds input length");
    std::vector<double> filtered;
    std::vector<double> acc;
    double a = 0.0;
    if (track) {
        filtered.assign(e.n_neurons, 0.0);
        acc.assign(e.n_neurons, 0.0);
        a = synapse_decay(tau_out, dt);
    }

    std::vector<std::uint32_t> spiked;
    for (std::size_t k = 0; k < input.size(); ++k) {
        spiked.clear();
        res.decoded.push_back(net.step(input[k], spiked));
        for (auto i : spiked) res.raster.events.push_back({i, k});
        if (track) {
            for (auto& f : filtered) f *= a;
            for (auto i : spiked) filtered[i] += (1.0 - a) * net.spike_amplitude();
            if (k >= window.begin && k < window.end)
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += filtered[i];
        }
    }
    if (track) {
        const double n = static_cast<double>(window.end - window.begin);
        for (auto& v : acc) v /= n;
        res.mean_activity = std::move(acc);
    }
    return res;
}

// Spike count per neuron.
inline std::vector<std::uint64_t> spike_counts(const SpikeRaster& raster, std::size_t n_neurons) {
    std::vector<std::uint64_t> counts(n_neurons, 0);
    for (const auto& ev : raster.events) {
        if (ev.neuron >= n_neurons) throw InputError("spike_counts: neuron index out of range");
        ++counts[ev.neuron];
    }
    return counts;
}

}  // namespace spikemon::nef
