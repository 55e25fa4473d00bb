#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "spikemon/error.hpp"
#include "spikemon/nef/ensemble.hpp"
#include "spikemon/nef/simulate.hpp"
#include "spikemon/pipeline/series.hpp"

namespace spikemon {

// Filter-and-clip network settings. One layer value is held at the input for
// `presentation_time`; the decoded value at the end of that window becomes the
// layer's filtered value.
struct FilterConfig {
    std::size_t neurons = 500;
    double radius = 1100.0;
    double dt = 0.001;
    double presentation_time = 0.01;
    double tau_in = 0.003;
    double tau_out = 0.003;
    std::uint64_t seed = 0;
    std::size_t stages = 1;

    // Ensemble sampling, not part of the published presets.
    nef::LifParams lif{};
    double intercept_low = -0.95;
    double intercept_high = 0.95;
    double max_rate_low = 400.0;
    double max_rate_high = 490.0;
    double reg = 0.1;
    std::size_t n_eval = 1000;

    std::size_t steps_per_layer() const {
        const double ratio = presentation_time / dt;
        const double steps = std::round(ratio);
        if (!(steps >= 1.0) || std::abs(ratio - steps) > 1e-6)
            throw ConfigError("filter: presentation_time must be a positive multiple of dt");
        return static_cast<std::size_t>(steps);
    }

    // Steps the network is driven with the first layer value before recording,
    // so every recorded layer sees a settled filter.
    std::size_t warmup_steps() const {
        const double settle = 10.0 * std::max(tau_in, tau_out) * static_cast<double>(stages);
        return std::max(steps_per_layer(), static_cast<std::size_t>(std::ceil(settle / dt)));
    }

    void validate() const {
        if (neurons < 1) throw ConfigError("filter: neurons must be positive");
        if (!(radius > 0.0)) throw ConfigError("filter: radius must be positive");
        if (!(dt > 0.0)) throw ConfigError("filter: dt must be positive");
        if (!(tau_in > 0.0) || !(tau_out > 0.0)) throw ConfigError("filter: time constants must be positive");
        if (stages < 1) throw ConfigError("filter: stages must be at least 1");
        if (neurons < stages) throw ConfigError("filter: fewer neurons than stages");
        steps_per_layer();
    }

    // Neurons in stage k; the total is split evenly with the remainder going to the first stages.
    std::size_t stage_neurons(std::size_t k) const {
        return neurons / stages + (k < neurons % stages ? 1 : 0);
    }

    nef::EnsembleConfig ensemble_config(std::size_t n) const {
        nef::EnsembleConfig e;
        e.n_neurons = n;
        e.radius = radius;
        e.lif = lif;
        e.intercept_low = intercept_low;
        e.intercept_high = intercept_high;
        e.max_rate_low = max_rate_low;
        e.max_rate_high = max_rate_high;
        e.reg = reg;
        e.n_eval = n_eval;
        return e;
    }

    FilterConfig with_tau(double tau) const {
        FilterConfig c = *this;
        c.tau_in = tau;
        c.tau_out = tau;
        return c;
    }
};

inline void to_json(nlohmann::json& j, const FilterConfig& c) {
    j = nlohmann::json{{"neurons", c.neurons}, {"radius", c.radius},   {"dt", c.dt},
                       {"presentation_time", c.presentation_time}, {"tau_in", c.tau_in},
                       {"tau_out", c.tau_out}, {"seed", c.seed},   {"stages", c.stages}};
}

// Unknown keys are rejected; missing keys keep the values already in `base`.
inline FilterConfig filter_config_from_json(const nlohmann::json& j, FilterConfig base = {}) {
    if (!j.is_object()) throw ConfigError("filter config must be a JSON object");
    static const char* known[] = {"neurons",        "radius",        "dt",           "presentation_time",
                                  "tau_in",         "tau_out",       "seed",         "stages",
                                  "baseline",       "tau_rc",        "tau_ref",      "intercepts",
                                  "max_rates",      "reg",           "n_eval",       "preset"};
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known))
            throw ConfigError("filter config: unknown key '" + key + "'");
    }
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("neurons", base.neurons);
        get("radius", base.radius);
        get("dt", base.dt);
        get("presentation_time", base.presentation_time);
        get("tau_in", base.tau_in);
        get("tau_out", base.tau_out);
        get("seed", base.seed);
        get("stages", base.stages);
        get("tau_rc", base.lif.tau_rc);
        get("tau_ref", base.lif.tau_ref);
        get("reg", base.reg);
        get("n_eval", base.n_eval);
        if (j.contains("intercepts")) {
            auto r = j.at("intercepts").get<std::vector<double>>();
            if (r.size() != 2) throw ConfigError("filter config: intercepts must be [low, high]");
            base.intercept_low = r[0];
            base.intercept_high = r[1];
        }
        if (j.contains("max_rates")) {
            auto r = j.at("max_rates").get<std::vector<double>>();
            if (r.size() != 2) throw ConfigError("filter config: max_rates must be [low, high]");
            base.max_rate_low = r[0];
            base.max_rate_high = r[1];
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("filter config: ") + e.what());
    }
    base.validate();
    return base;
}

// Synaptic time constants per backend, sensor and power reduction.
// fpga-* presets run the two-stage cascade (2 x 250 neurons).
inline const std::map<std::string, FilterConfig>& presets() {
    static const std::map<std::string, FilterConfig> table = [] {
        struct Row {
            const char* sensor;
            int reduction;
            double cpu, fpga, loihi;
        };
        const Row rows[] = {
            {"pd1", 33, 0.003, 0.003, 0.003}, {"pd1", 66, 0.002, 0.002, 0.002}, {"pd1", 100, 0.002, 0.002, 0.002},
            {"pd2", 33, 0.006, 0.008, 0.009}, {"pd2", 66, 0.004, 0.004, 0.008}, {"pd2", 100, 0.004, 0.004, 0.006},
            {"bd", 33, 0.006, 0.004, 0.02},   {"bd", 66, 0.006, 0.004, 0.008},  {"bd", 100, 0.005, 0.004, 0.006},
        };
        std::map<std::string, FilterConfig> out;
        for (const auto& r : rows) {
            const std::string suffix = std::string("-") + r.sensor + "-" + std::to_string(r.reduction);
            out["cpu" + suffix] = FilterConfig{}.with_tau(r.cpu);
            FilterConfig fpga = FilterConfig{}.with_tau(r.fpga);
            fpga.stages = 2;
            out["fpga" + suffix] = fpga;
            out["loihi" + suffix] = FilterConfig{}.with_tau(r.loihi);
        }
        return out;
    }();
    return table;
}

inline FilterConfig preset(const std::string& name) {
    auto it = presets().find(name);
    if (it == presets().end()) throw ConfigError("unknown preset '" + name + "'");
    return it->second;
}

// Ensembles for every cascade stage. Stage k uses seed + k.
inline std::vector<nef::Ensemble> build_stage_ensembles(const FilterConfig& cfg) {
    cfg.validate();
    std::vector<nef::Ensemble> out;
    out.reserve(cfg.stages);
    for (std::size_t k = 0; k < cfg.stages; ++k)
        out.push_back(nef::build_ensemble(cfg.ensemble_config(cfg.stage_neurons(k)), cfg.seed + k));
    return out;
}

// Everything produced by one pass of a series through the network.
struct FilterRun {
    SignalSeries filtered;
    nef::SpikeRaster raster;  // recorded steps only; neuron ids offset by stage
    std::vector<std::size_t> stage_offsets;  // first neuron id of each stage
    std::size_t total_neurons = 0;
    std::size_t steps_per_layer = 0;
    std::vector<double> decoded;  // final-stage output per recorded step
    std::vector<double> mean_activity;  // final-stage per-neuron activity, when requested
};

// Layers [first, last] whose per-neuron filtered activity should be averaged.
struct LayerWindow {
    int first = 0;
    int last = -1;
    bool empty() const { return last < first; }
};

inline FilterRun run_filter(const SignalSeries& series, const FilterConfig& cfg,
                            const std::vector<nef::Ensemble>& stages, LayerWindow activity = {}) {
    cfg.validate();
    if (series.empty()) throw InputError("filter: empty series");
    if (stages.size() != cfg.stages) throw ConfigError("filter: ensemble count does not match stages");
    series.validate(true);

    const std::size_t per_layer = cfg.steps_per_layer();
    const std::size_t warmup = cfg.warmup_steps();
    const auto samples = series.samples();
    const auto layers = series.layers();

    std::vector<double> drive;
    drive.reserve(warmup + per_layer * samples.size());
    drive.insert(drive.end(), warmup, samples.front());
    for (double v : samples) drive.insert(drive.end(), per_layer, v);

    FilterRun run;
    run.steps_per_layer = per_layer;
    run.raster.dt = cfg.dt;
    run.raster.steps = drive.size() - warmup;

    std::size_t offset = 0;
    for (std::size_t k = 0; k < stages.size(); ++k) {
        nef::ActivityWindow window;
        const bool last_stage = k + 1 == stages.size();
        if (last_stage && !activity.empty()) {
            auto lo = std::find_if(layers.begin(), layers.end(), [&](int l) { return l >= activity.first; });
            auto hi = std::find_if(layers.begin(), layers.end(), [&](int l) { return l > activity.last; });
            if (lo == layers.end() || lo >= hi) throw InputError("filter: activity window outside the series");
            window.begin = warmup + per_layer * static_cast<std::size_t>(lo - layers.begin());
            window.end = warmup + per_layer * static_cast<std::size_t>(hi - layers.begin());
        }
        auto res = nef::simulate_filter(stages[k], drive, cfg.dt, cfg.tau_in, cfg.tau_out, window);
        run.stage_offsets.push_back(offset);
        for (const auto& ev : res.raster.events) {
            if (ev.step < warmup) continue;
            run.raster.events.push_back({static_cast<std::uint32_t>(ev.neuron + offset), ev.step - warmup});
        }
        offset += stages[k].n_neurons;
        drive = std::move(res.decoded);
        if (last_stage) run.mean_activity = std::move(res.mean_activity);
    }
    // Stage rasters were appended one after another; restore global step order.
    std::stable_sort(run.raster.events.begin(), run.raster.events.end(),
                     [](const nef::SpikeEvent& a, const nef::SpikeEvent& b) { return a.step < b.step; });
    run.total_neurons = offset;

    run.decoded.assign(drive.begin() + static_cast<std::ptrdiff_t>(warmup), drive.end());
    std::vector<double> filtered(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) filtered[i] = run.decoded[(i + 1) * per_layer - 1];
    run.filtered = series.with_samples(filtered);
    return run;
}

inline SignalSeries cascade_filter(const SignalSeries& series, const FilterConfig& cfg,
                                   const std::vector<nef::Ensemble>& stages) {
    return run_filter(series, cfg, stages).filtered;
}

inline SignalSeries cascade_filter(const SignalSeries& series, const FilterConfig& cfg, std::size_t n_stages) {
    FilterConfig c = cfg;
    c.stages = n_stages;
    return cascade_filter(series, c, build_stage_ensembles(c));
}

// Single-ensemble filter; `cfg.stages` is ignored.
inline SignalSeries snn_filter(const SignalSeries& series, const FilterConfig& cfg) {
    return cascade_filter(series, cfg, 1);
}

}  // namespace spikemon
