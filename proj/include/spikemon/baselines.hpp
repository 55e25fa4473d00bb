#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "spikemon/error.hpp"
#include "spikemon/pipeline/series.hpp"

namespace spikemon::baselines {

enum class Kind { SavitzkyGolay, Butterworth, MovingAverage, Gaussian };

inline std::string to_string(Kind k) {
    switch (k) {
        case Kind::SavitzkyGolay: return "savitzky_golay";
        case Kind::Butterworth: return "butterworth";
        case Kind::MovingAverage: return "moving_average";
        case Kind::Gaussian: return "gaussian";
    }
    return "?";
}

inline Kind parse_kind(const std::string& s) {
    if (s == "savitzky_golay") return Kind::SavitzkyGolay;
    if (s == "butterworth") return Kind::Butterworth;
    if (s == "moving_average") return Kind::MovingAverage;
    if (s == "gaussian") return Kind::Gaussian;
    throw ConfigError("unknown baseline filter '" + s + "'");
}

// Display names used in comparison tables.
inline std::string display_name(Kind k) {
    switch (k) {
        case Kind::SavitzkyGolay: return "Savitzky-Golay";
        case Kind::Butterworth: return "Butterworth";
        case Kind::MovingAverage: return "Moving Average";
        case Kind::Gaussian: return "Gaussian";
    }
    return "?";
}

struct FilterSpec {
    Kind kind = Kind::MovingAverage;
    int window = 5;        // moving_average, savitzky_golay
    int polyorder = 2;     // savitzky_golay
    double cutoff = 0.25;  // butterworth, fraction of Nyquist
    int order = 2;         // butterworth
    double sigma = 1.0;    // gaussian, in layers

    void validate() const {
        switch (kind) {
            case Kind::MovingAverage:
            case Kind::SavitzkyGolay:
                if (window < 3 || window % 2 == 0) throw ConfigError("baseline: window must be odd and >= 3");
                if (kind == Kind::SavitzkyGolay && (polyorder < 0 || polyorder >= window))
                    throw ConfigError("baseline: polyorder must be in [0, window)");
                break;
            case Kind::Butterworth:
                if (!(cutoff > 0.0 && cutoff < 1.0)) throw ConfigError("baseline: cutoff must be in (0, 1)");
                if (order < 1 || order > 8) throw ConfigError("baseline: butterworth order must be in [1, 8]");
                break;
            case Kind::Gaussian:
                if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("baseline: sigma must be positive");
                break;
        }
    }
};

inline void to_json(nlohmann::json& j, const FilterSpec& s) {
    j = nlohmann::json{{"kind", to_string(s.kind)}};
    switch (s.kind) {
        case Kind::MovingAverage: j["window"] = s.window; break;
        case Kind::SavitzkyGolay:
            j["window"] = s.window;
            j["polyorder"] = s.polyorder;
            break;
        case Kind::Butterworth:
            j["cutoff"] = s.cutoff;
            j["order"] = s.order;
            break;
        case Kind::Gaussian: j["sigma"] = s.sigma; break;
    }
}

inline FilterSpec spec_from_json(const nlohmann::json& j) {
    try {
        FilterSpec s;
        s.kind = parse_kind(j.at("kind").get<std::string>());
        if (j.contains("window")) s.window = j.at("window").get<int>();
        if (j.contains("polyorder")) s.polyorder = j.at("polyorder").get<int>();
        if (j.contains("cutoff")) s.cutoff = j.at("cutoff").get<double>();
        if (j.contains("order")) s.order = j.at("order").get<int>();
        if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("baseline spec: ") + e.what());
    }
}

namespace detail {

// Mirror index about the end samples (the edge sample itself is not repeated).
inline std::size_t reflect(long i, long n) {
    if (n == 1) return 0;
    const long period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return static_cast<std::size_t>(i < n ? i : period - i);
}

// Centered FIR with reflect padding; kernel length must be odd.
inline std::vector<double> convolve_reflect(std::span<const double> x, const std::vector<double>& kernel) {
    const long n = static_cast<long>(x.size());
    const long half = static_cast<long>(kernel.size() / 2);
    std::vector<double> y(x.size());
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long k = -half; k <= half; ++k) acc += kernel[static_cast<std::size_t>(k + half)] * x[reflect(i + k, n)];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

inline std::vector<double> savgol_coefficients(int window, int polyorder) {
    const int half = window / 2;
    Eigen::MatrixXd v(window, polyorder + 1);
    for (int r = 0; r < window; ++r)
        for (int c = 0; c <= polyorder; ++c) v(r, c) = std::pow(static_cast<double>(r - half), c);
    const Eigen::MatrixXd pinv = v.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
    std::vector<double> out(static_cast<std::size_t>(window));
    for (int r = 0; r < window; ++r) out[static_cast<std::size_t>(r)] = pinv(0, r);
    return out;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    const int half = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + half)] = w;
        sum += w;
    }
    for (auto& w : k) w /= sum;
    return k;
}

// Normalized (a0 = 1) section: y = b0 x + b1 x1 + b2 x2 - a1 y1 - a2 y2.
struct Section {
    double b0, b1, b2, a1, a2;
};

// Digital Butterworth low-pass via the bilinear transform with frequency prewarping,
// as cascaded second-order sections (plus one first-order section for odd orders).
inline std::vector<Section> butterworth_sections(int order, double cutoff) {
    const double c = 1.0 / std::tan(std::numbers::pi * cutoff / 2.0);
    std::vector<Section> out;
    for (int k = 0; k < order / 2; ++k) {
        const double zeta = std::sin(std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order));
        const double a0 = c * c + 2.0 * zeta * c + 1.0;
        out.push_back({1.0 / a0, 2.0 / a0, 1.0 / a0, 2.0 * (1.0 - c * c) / a0, (c * c - 2.0 * zeta * c + 1.0) / a0});
    }
    if (order % 2 == 1) {
        const double a0 = c + 1.0;
        out.push_back({1.0 / a0, 1.0 / a0, 0.0, (1.0 - c) / a0, 0.0});
    }
    return out;
}

// Direct form II transposed, started at the steady state for the first input sample.
inline void run_section(const Section& s, std::vector<double>& x) {
    if (x.empty()) return;
    const double x0 = x.front();
    double z2 = (s.b2 - s.a2) * x0;
    double z1 = (s.b1 - s.a1) * x0 + z2;
    for (auto& v : x) {
        const double in = v;
        const double out = s.b0 * in + z1;
        z1 = s.b1 * in - s.a1 * out + z2;
        z2 = s.b2 * in - s.a2 * out;
        v = out;
    }
}

inline std::vector<double> filtfilt(std::span<const double> x, const std::vector<Section>& sections) {
    const long n = static_cast<long>(x.size());
    const long pad = std::min<long>(n - 1, 3 * (2 * static_cast<long>(sections.size()) + 1));
    std::vector<double> ext;
    ext.reserve(static_cast<std::size_t>(n + 2 * pad));
    for (long i = -pad; i < n + pad; ++i) ext.push_back(x[reflect(i, n)]);

    for (const auto& s : sections) run_section(s, ext);
    std::reverse(ext.begin(), ext.end());
    for (const auto& s : sections) run_section(s, ext);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + pad, ext.begin() + pad + n};
}

}  // namespace detail

inline std::vector<double> filter_samples(std::span<const double> x, const FilterSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case Kind::MovingAverage: {
            if (x.size() < static_cast<std::size_t>(spec.window)) throw InputError("baseline: series shorter than window");
            return detail::convolve_reflect(x, std::vector<double>(static_cast<std::size_t>(spec.window),
                                                                   1.0 / spec.window));
        }
        case Kind::SavitzkyGolay:
            if (x.size() < static_cast<std::size_t>(spec.window)) throw InputError("baseline: series shorter than window");
            return detail::convolve_reflect(x, detail::savgol_coefficients(spec.window, spec.polyorder));
        case Kind::Gaussian:
            if (x.empty()) throw InputError("baseline: empty series");
            return detail::convolve_reflect(x, detail::gaussian_kernel(spec.sigma));
        case Kind::Butterworth:
            if (x.size() < 3) throw InputError("baseline: butterworth needs at least 3 samples");
            return detail::filtfilt(x, detail::butterworth_sections(spec.order, spec.cutoff));
    }
    throw ConfigError("baseline: unknown kind");
}

inline SignalSeries apply_baseline_filter(const SignalSeries& series, const FilterSpec& spec) {
    const auto samples = series.samples();
    return series.with_samples(filter_samples(samples, spec));
}

}  // namespace spikemon::baselines
