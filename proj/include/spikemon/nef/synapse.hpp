#pragma once

#include <cmath>

#include "spikemon/error.hpp"

namespace spikemon::nef {

// First-order exponential low-pass with unit DC gain, discretized exactly:
//   y[k] = a y[k-1] + (1 - a) x[k],  a = exp(-dt / tau_syn)
struct SynapseState {
    double tau_syn = 0.005;
    double y = 0.0;
};

inline double synapse_decay(double tau_syn, double dt) {
    if (!(tau_syn > 0.0) || !std::isfinite(tau_syn)) throw ConfigError("synapse: tau_syn must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("synapse: dt must be positive");
    return std::exp(-dt / tau_syn);
}

inline SynapseState synapse_step(SynapseState s, double x, double dt) {
    if (!std::isfinite(x)) throw InputError("synapse_step: non-finite input");
    const double a = synapse_decay(s.tau_syn, dt);
    s.y = s.y * a + x * (1.0 - a);
    return s;
}

// Hot-loop variant with a precomputed decay factor.
class LowPass {
public:
    LowPass(double tau_syn, double dt, double y0 = 0.0) : a_(synapse_decay(tau_syn, dt)), y_(y0) {}

    double step(double x) {
        y_ = y_ * a_ + x * (1.0 - a_);
        return y_;
    }
    double value() const { return y_; }
    double decay() const { return a_; }

private:
    double a_;
    double y_;
};

}  // namespace spikemon::nef
