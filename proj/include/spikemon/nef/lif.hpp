#pragma once

#include <algorithm>
#include <cmath>

#include "spikemon/error.hpp"

namespace spikemon::nef {

// Leaky integrate-and-fire constants. Defaults are the normalized convention
// (E_l = 0, V_th = 1, g_L = 1, I_spk = 1) in which the firing threshold sits at
// a normalized driving current of exactly 1.
struct LifParams {
    double tau_rc = 0.02;    // membrane time constant [s]
    double tau_ref = 0.002;  // refractory period [s]
    double v_th = 1.0;
    double e_l = 0.0;
    double g_l = 1.0;
    double i_spk = 1.0;

    void validate() const {
        if (!(tau_rc > 0.0) || !std::isfinite(tau_rc))
            throw ConfigError("lif: tau_rc must be positive");
        if (!(tau_ref >= 0.0) || !std::isfinite(tau_ref))
            throw ConfigError("lif: tau_ref must be non-negative");
        if (!(v_th > e_l)) throw ConfigError("lif: v_th must exceed e_l");
        if (!(g_l > 0.0)) throw ConfigError("lif: g_l must be positive");
        if (!(i_spk > 0.0)) throw ConfigError("lif: i_spk must be positive");
    }

    // Highest rate the neuron can reach (infinite when tau_ref = 0).
    double max_rate() const { return tau_ref > 0.0 ? 1.0 / tau_ref : INFINITY; }
};

struct LifState {
    double v = 0.0;
    // Time left in the refractory period, measured from the end of the last step.
    double refractory_remaining = 0.0;
};

struct LifStepResult {
    LifState state;
    bool spiked = false;
};

// Converts a raw synaptic current into the normalized drive j = I / (g_L (V_th - E_l)),
// so that j = 1 is the rheobase.
inline double normalized_current(double current, const LifParams& p) {
    return current / (p.g_l * (p.v_th - p.e_l));
}

// Steady-state firing rate [Hz] for a constant normalized drive j.
inline double lif_rate(double j, const LifParams& p) {
    if (!std::isfinite(j)) throw InputError("lif_rate: non-finite driving current");
    if (j <= 1.0) return 0.0;
    return 1.0 / (p.tau_ref + p.tau_rc * std::log1p(1.0 / (j - 1.0)));
}

// Inverse of lif_rate above threshold: the drive that produces `rate` Hz.
inline double lif_current_for_rate(double rate, const LifParams& p) {
    if (!(rate > 0.0) || !(rate < p.max_rate()))
        throw ConfigError("lif: requested rate is not reachable for this refractory period");
    return 1.0 / (1.0 - std::exp((p.tau_ref - 1.0 / rate) / p.tau_rc));
}

// Advances one neuron by dt with the membrane equation solved exactly over the
// non-refractory part of the step. When the threshold is crossed, the crossing
// time inside the step is recovered analytically so the refractory period starts
// at the true spike time rather than at the step boundary; this keeps the
// simulated rate equal to lif_rate at any dt.
inline LifStepResult lif_step(LifState state, double j, double dt, const LifParams& p) {
    if (!std::isfinite(j) || !std::isfinite(state.v) || !std::isfinite(state.refractory_remaining))
        throw InputError("lif_step: non-finite input");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("lif_step: dt must be positive");

    const double active = std::clamp(dt - state.refractory_remaining, 0.0, dt);
    const double target = p.e_l + j * (p.v_th - p.e_l);
    const double v0 = state.v;

    LifStepResult out;
    out.state.refractory_remaining = std::max(0.0, state.refractory_remaining - dt);
    double v = target + (v0 - target) * std::exp(-active / p.tau_rc);

    if (v >= p.v_th && active > 0.0) {
        double since_spike = active;
        if (target > p.v_th && v0 < p.v_th)
            since_spike = std::clamp(p.tau_rc * std::log((target - p.v_th) / (target - v)), 0.0, active);
        out.spiked = true;
        out.state.v = p.e_l;
        out.state.refractory_remaining = std::max(0.0, p.tau_ref - since_spike);
        return out;
    }
    out.state.v = std::max(v, p.e_l);
    return out;
}

}  // namespace spikemon::nef
