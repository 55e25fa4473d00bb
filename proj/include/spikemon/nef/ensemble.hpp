#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "spikemon/error.hpp"
#include "spikemon/nef/lif.hpp"

namespace spikemon::nef {

struct NeuronTuning {
    double encoder = 1.0;  // +1 or -1 for scalar signals
    double gain = 1.0;
    double bias = 0.0;
    double intercept = 0.0;  // normalized input where firing starts
    double max_rate = 0.0;   // rate at normalized input 1 along the encoder [Hz]
};

struct EnsembleConfig {
    std::size_t n_neurons = 500;
    double radius = 1100.0;
    LifParams lif{};
    double intercept_low = -0.95;
    double intercept_high = 0.95;
    double max_rate_low = 400.0;
    double max_rate_high = 490.0;
    // Identity decoders are solved at build time with these settings.
    std::size_t n_eval = 1000;
    double reg = 0.1;

    void validate() const {
        lif.validate();
        if (n_neurons < 1) throw ConfigError("ensemble: need at least one neuron");
        if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ensemble: radius must be positive");
        if (!(intercept_low <= intercept_high) || intercept_low < -1.0 || !(intercept_high < 1.0))
            throw ConfigError("ensemble: intercept range must be a non-empty subset of [-1, 1)");
        if (!(max_rate_low <= max_rate_high) || !(max_rate_low > 0.0))
            throw ConfigError("ensemble: max-rate range must be non-empty and positive");
        if (!(max_rate_high < lif.max_rate()))
            throw ConfigError("ensemble: max rate is unreachable with the configured refractory period");
        if (n_eval < 1) throw ConfigError("ensemble: n_eval must be positive");
        if (!(reg >= 0.0)) throw ConfigError("ensemble: reg must be non-negative");
    }
};

struct Ensemble {
    std::size_t n_neurons = 0;
    double radius = 1.0;
    LifParams lif{};
    std::vector<NeuronTuning> tunings;
    std::vector<double> decoders;  // input units per Hz
    std::uint64_t seed = 0;

    // Normalized driving current of neuron i for an input value x (input units).
    double drive(std::size_t i, double x) const {
        const auto& t = tunings[i];
        return t.gain * t.encoder * (x / radius) + t.bias;
    }
};

// Activity matrix: entry (i, k) is the steady-state rate of neuron i at xs[k].
inline Eigen::MatrixXd tuning_curves(const Ensemble& e, std::span<const double> xs) {
    Eigen::MatrixXd rates(static_cast<Eigen::Index>(e.n_neurons), static_cast<Eigen::Index>(xs.size()));
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (!std::isfinite(xs[k])) throw InputError("tuning_curves: non-finite input");
        for (std::size_t i = 0; i < e.n_neurons; ++i)
            rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = lif_rate(e.drive(i, xs[k]), e.lif);
    }
    return rates;
}

// Evenly spaced points covering [-radius, radius].
inline std::vector<double> eval_points(double radius, std::size_t n) {
    std::vector<double> xs(n);
    if (n == 1) {
        xs[0] = 0.0;
        return xs;
    }
    for (std::size_t k = 0; k < n; ++k)
        xs[k] = -radius + 2.0 * radius * static_cast<double>(k) / static_cast<double>(n - 1);
    return xs;
}

// Regularized least-squares decoders for `target`:
//   min |A^T d - y|^2 + n_eval sigma^2 |d|^2,  sigma = reg * max(A)
inline std::vector<double> solve_decoders(const Ensemble& e, const std::function<double(double)>& target,
                                          std::size_t n_eval, double reg) {
    if (n_eval < 1) throw ConfigError("solve_decoders: n_eval must be positive");
    if (!(reg >= 0.0) || !std::isfinite(reg)) throw ConfigError("solve_decoders: reg must be non-negative");

    const auto xs = eval_points(e.radius, n_eval);
    const Eigen::MatrixXd a = tuning_curves(e, xs);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n_eval));
    for (std::size_t k = 0; k < n_eval; ++k) y(static_cast<Eigen::Index>(k)) = target(xs[k]);

    const double sigma = reg * a.maxCoeff();
    Eigen::MatrixXd gram = a * a.transpose();
    gram.diagonal().array() += static_cast<double>(n_eval) * sigma * sigma;

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
    if (!(rcond > 1e-15)) {
        std::ostringstream msg;
        msg << "solve_decoders: gram matrix is singular (neurons=" << e.n_neurons << ", n_eval=" << n_eval
            << ", reg=" << reg << ", max rate=" << a.maxCoeff() << ", rcond=" << rcond << ")";
        throw NumericError(msg.str());
    }
    const Eigen::VectorXd d = llt.solve(a * y);
    if (!d.allFinite()) throw NumericError("solve_decoders: non-finite decoders");
    return {d.data(), d.data() + d.size()};
}

// Decoded static estimate sum_i d_i a_i(x) at each point.
inline std::vector<double> decode_static(const Ensemble& e, std::span<const double> xs) {
    const Eigen::MatrixXd a = tuning_curves(e, xs);
    const Eigen::Map<const Eigen::VectorXd> d(e.decoders.data(), static_cast<Eigen::Index>(e.decoders.size()));
    const Eigen::VectorXd out = a.transpose() * d;
    return {out.data(), out.data() + out.size()};
}

// Samples encoders, intercepts and max rates, then derives gain and bias so that
// J(intercept) = 1 and the rate at normalized input 1 equals max_rate. Identity
// decoders are solved before returning.
inline Ensemble build_ensemble(const EnsembleConfig& cfg, std::uint64_t seed) {
    cfg.validate();

    Ensemble e;
    e.n_neurons = cfg.n_neurons;
    e.radius = cfg.radius;
    e.lif = cfg.lif;
    e.seed = seed;
    e.tunings.resize(cfg.n_neurons);

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution sign(0.5);
    std::uniform_real_distribution<double> intercept(cfg.intercept_low, cfg.intercept_high);
    std::uniform_real_distribution<double> max_rate(cfg.max_rate_low, cfg.max_rate_high);
    for (auto& t : e.tunings) t.encoder = sign(rng) ? 1.0 : -1.0;
    for (auto& t : e.tunings) t.intercept = cfg.intercept_low == cfg.intercept_high ? cfg.intercept_low : intercept(rng);
    for (auto& t : e.tunings) t.max_rate = cfg.max_rate_low == cfg.max_rate_high ? cfg.max_rate_low : max_rate(rng);

    for (auto& t : e.tunings) {
        const double j_max = lif_current_for_rate(t.max_rate, cfg.lif);
        t.gain = (j_max - 1.0) / (1.0 - t.intercept);
        t.bias = 1.0 - t.gain * t.intercept;
    }

    e.decoders = solve_decoders(e, [](double x) { return x; }, cfg.n_eval, cfg.reg);
    return e;
}

}  // namespace spikemon::nef
