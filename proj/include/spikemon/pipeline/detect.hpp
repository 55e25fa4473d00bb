#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spikemon/error.hpp"
#include "spikemon/pipeline/series.hpp"

namespace spikemon {

// Signed percent deviation per layer; nullopt marks a layer whose healthy value is
// (numerically) zero.
struct DeviationSeries {
    std::map<int, std::optional<double>> values;

    std::size_t size() const { return values.size(); }
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw InputError("median of empty set");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

// Median absolute deviation from the median (unscaled).
inline double mad(const std::vector<double>& v) {
    const double m = median(v);
    std::vector<double> dev;
    dev.reserve(v.size());
    for (double x : v) dev.push_back(std::abs(x - m));
    return median(std::move(dev));
}

// 100 (defective - healthy) / healthy on the shared layers. Healthy values below
// 1e-9 of the healthy median magnitude are treated as zero.
inline DeviationSeries percent_deviation(const SignalSeries& defective, const SignalSeries& healthy) {
    std::vector<double> mags;
    for (const auto& [_, v] : healthy.values) mags.push_back(std::abs(v));
    DeviationSeries out;
    if (mags.empty()) throw InputError("percent_deviation: empty healthy series");
    const double floor = 1e-9 * median(mags);

    for (const auto& [layer, d] : defective.values) {
        auto it = healthy.values.find(layer);
        if (it == healthy.values.end()) continue;
        const double h = it->second;
        if (h == 0.0 || std::abs(h) < floor)
            out.values.emplace(layer, std::nullopt);
        else
            out.values.emplace(layer, 100.0 * (d - h) / h);
    }
    if (out.values.empty()) throw InputError("percent_deviation: series share no layers");
    return out;
}

enum class PolicyKind { Fixed, Adaptive };

inline std::string to_string(PolicyKind k) { return k == PolicyKind::Fixed ? "fixed" : "adaptive"; }

// Layer is flagged when its deviation is at or below -threshold.
// Adaptive: threshold = k * MAD of the deviations over the calibration layers,
// falling back to `theta_min` when that MAD is zero.
struct FlagPolicy {
    PolicyKind kind = PolicyKind::Adaptive;
    double theta = 5.0;  // fixed threshold [%]
    double k = 6.0;
    std::optional<int> calibration_first;  // default: first deviation layer
    int calibration_last = 608;           // default: five layers before the nominal defect start (613)
    double theta_min = 10.0;               // [%]

    static FlagPolicy fixed(double theta) {
        FlagPolicy p;
        p.kind = PolicyKind::Fixed;
        p.theta = theta;
        return p;
    }
    static FlagPolicy adaptive(double k = 6.0, std::optional<int> first = std::nullopt, int last = 608) {
        FlagPolicy p;
        p.kind = PolicyKind::Adaptive;
        p.k = k;
        p.calibration_first = first;
        p.calibration_last = last;
        return p;
    }
    // Calibration ends five layers before the first known defect layer.
    FlagPolicy calibrated_before(int defect_start) const {
        FlagPolicy p = *this;
        p.calibration_last = defect_start - 5;
        return p;
    }
};

struct DetectionScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct DetectionReport {
    std::set<int> flagged_layers;
    DeviationSeries deviations;
    double threshold_used = 0.0;
    FlagPolicy policy{};
    bool fallback_used = false;
    double calibration_mad = 0.0;
    std::optional<DetectionScores> metrics;
};

inline double resolve_threshold(const DeviationSeries& dev, const FlagPolicy& policy, double* mad_out = nullptr,
                                bool* fallback = nullptr) {
    if (policy.kind == PolicyKind::Fixed) {
        if (!(policy.theta >= 0.0)) throw ConfigError("flag policy: fixed threshold must be non-negative");
        return policy.theta;
    }
    if (!(policy.k > 0.0)) throw ConfigError("flag policy: k must be positive");
    const int first = policy.calibration_first.value_or(dev.values.empty() ? 0 : dev.values.begin()->first);
    std::vector<double> cal;
    for (const auto& [layer, v] : dev.values)
        if (layer >= first && layer <= policy.calibration_last && v) cal.push_back(*v);
    if (cal.empty())
        throw ConfigError("flag policy: calibration range [" + std::to_string(first) + ", " +
                          std::to_string(policy.calibration_last) + "] has no defined deviations");
    const double m = mad(cal);
    if (mad_out) *mad_out = m;
    if (m == 0.0) {
        if (fallback) *fallback = true;
        return policy.theta_min;
    }
    return policy.k * m;
}

inline DetectionReport flag_anomalies(const DeviationSeries& dev, const FlagPolicy& policy) {
    DetectionReport r;
    r.deviations = dev;
    r.policy = policy;
    r.threshold_used = resolve_threshold(dev, policy, &r.calibration_mad, &r.fallback_used);
    for (const auto& [layer, v] : dev.values)
        if (v && *v <= -r.threshold_used) r.flagged_layers.insert(layer);
    return r;
}

}  // namespace spikemon
