#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "spikemon/baselines.hpp"
#include "spikemon/error.hpp"
#include "spikemon/io.hpp"
#include "spikemon/pipeline/detect.hpp"
#include "spikemon/pipeline/filter.hpp"

namespace spikemon::eval {

struct GroundTruth {
    std::set<int> defect_layers;
    int window_first = 570;
    int window_last = 650;

    bool in_window(int layer) const { return layer >= window_first && layer <= window_last; }
    int first_defect() const {
        if (defect_layers.empty()) throw InputError("ground truth has no defect layers");
        return *defect_layers.begin();
    }

    void validate() const {
        if (window_last < window_first) throw InputError("ground truth: empty window");
        for (int l : defect_layers)
            if (!in_window(l)) throw InputError("ground truth: defect layer " + std::to_string(l) + " outside window");
    }
};

inline void to_json(nlohmann::json& j, const GroundTruth& t) {
    j = nlohmann::json{{"defect_layers", std::vector<int>(t.defect_layers.begin(), t.defect_layers.end())},
                       {"window", {t.window_first, t.window_last}}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
    try {
        GroundTruth t;
        auto layers = j.at("defect_layers").get<std::vector<int>>();
        t.defect_layers.insert(layers.begin(), layers.end());
        if (j.contains("window")) {
            auto w = j.at("window").get<std::vector<int>>();
            if (w.size() != 2) throw InputError("ground truth: window must be [first, last]");
            t.window_first = w[0];
            t.window_last = w[1];
        }
        t.validate();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ground truth: ") + e.what());
    }
}

// Per-layer scores over the truth window; flags outside the window are not counted.
inline DetectionScores f1_score(const std::set<int>& flags, const GroundTruth& truth) {
    std::size_t tp = 0, fp = 0;
    for (int l : flags) {
        if (!truth.in_window(l)) continue;
        if (truth.defect_layers.count(l))
            ++tp;
        else
            ++fp;
    }
    const std::size_t fn = truth.defect_layers.size() - tp;
    DetectionScores s;
    s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

// Adaptive policies calibrate on layers up to five before the first known defect.
inline FlagPolicy policy_for(const FlagPolicy& policy, const std::optional<GroundTruth>& truth) {
    if (policy.kind == PolicyKind::Adaptive && truth && !truth->defect_layers.empty())
        return policy.calibrated_before(truth->first_defect());
    return policy;
}

// Filters both series with identical ensembles, then deviation, flagging and (optionally) scoring.
inline DetectionReport detect(const SignalSeries& defective, const SignalSeries& healthy, const FilterConfig& cfg,
                              const std::vector<nef::Ensemble>& ensembles, const FlagPolicy& policy,
                              const std::optional<GroundTruth>& truth = std::nullopt) {
    const auto fd = cascade_filter(defective, cfg, ensembles);
    const auto fh = cascade_filter(healthy, cfg, ensembles);
    auto report = flag_anomalies(percent_deviation(fd, fh), policy_for(policy, truth));
    if (truth) report.metrics = f1_score(report.flagged_layers, *truth);
    return report;
}

inline DetectionReport detect(const SignalSeries& defective, const SignalSeries& healthy, const FilterConfig& cfg,
                              const FlagPolicy& policy, const std::optional<GroundTruth>& truth = std::nullopt) {
    return detect(defective, healthy, cfg, build_stage_ensembles(cfg), policy, truth);
}

struct SweepRow {
    double tau = 0.0;
    DetectionScores scores{};
    std::size_t flagged = 0;
    std::optional<std::string> error;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double best_tau = 0.0;

    const SweepRow& row(double tau) const {
        for (const auto& r : rows)
            if (r.tau == tau) return r;
        throw InputError("sweep: no row for tau " + fmt_num(tau));
    }
    double best_f1() const { return row(best_tau).scores.f1; }
};

// Each tau drives both input and output synapses. Ensembles do not depend on tau
// and are built once. Ties in F1 resolve to the smallest tau.
inline SweepResult sweep_tau(const SignalSeries& defective, const SignalSeries& healthy, const std::vector<double>& taus,
                             const FilterConfig& cfg, const GroundTruth& truth,
                             const FlagPolicy& policy = FlagPolicy::adaptive()) {
    if (taus.empty()) throw InputError("sweep: no time constants");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0)) throw InputError("sweep: time constants must be positive");
        if (i && !(taus[i] > taus[i - 1])) throw InputError("sweep: time constants must be strictly increasing");
    }
    const auto ensembles = build_stage_ensembles(cfg);

    SweepResult out;
    double best = -1.0;
    for (double tau : taus) {
        SweepRow row;
        row.tau = tau;
        try {
            auto report = detect(defective, healthy, cfg.with_tau(tau), ensembles, policy, truth);
            row.scores = *report.metrics;
            row.flagged = report.flagged_layers.size();
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        if (!row.error && row.scores.f1 > best) {
            best = row.scores.f1;
            out.best_tau = tau;
        }
        out.rows.push_back(row);
    }
    if (best < 0.0) throw NumericError("sweep: every time constant failed");
    return out;
}

struct ComparisonRow {
    std::string name;
    DetectionScores scores{};
    std::optional<std::string> error;
};

// One row per baseline spec (raw series filtered by the classical filter), then the SNN row.
inline std::vector<ComparisonRow> compare_filters(const SignalSeries& defective, const SignalSeries& healthy,
                                                  const std::vector<baselines::FilterSpec>& specs,
                                                  const FilterConfig& snn, const GroundTruth& truth,
                                                  const FlagPolicy& policy = FlagPolicy::adaptive()) {
    std::vector<ComparisonRow> rows;
    const auto pol = policy_for(policy, truth);
    for (const auto& spec : specs) {
        ComparisonRow row;
        row.name = baselines::display_name(spec.kind);
        try {
            const auto fd = baselines::apply_baseline_filter(defective, spec);
            const auto fh = baselines::apply_baseline_filter(healthy, spec);
            row.scores = f1_score(flag_anomalies(percent_deviation(fd, fh), pol).flagged_layers, truth);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    ComparisonRow snn_row;
    snn_row.name = "SNN";
    try {
        snn_row.scores = *detect(defective, healthy, snn, policy, truth).metrics;
    } catch (const std::exception& e) {
        snn_row.error = e.what();
    }
    rows.push_back(snn_row);
    return rows;
}

inline std::string format_sweep_csv(const SweepResult& r, const std::vector<std::string>& comments = {}) {
    std::ostringstream out;
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "tau,precision,recall,f1,flagged\n";
    for (const auto& row : r.rows) {
        if (row.error) {
            out << fmt_num(row.tau) << ",,,,\n";
            continue;
        }
        out << fmt_num(row.tau) << ',' << fmt_num(row.scores.precision, 6) << ',' << fmt_num(row.scores.recall, 6)
            << ',' << fmt_num(row.scores.f1, 6) << ',' << row.flagged << '\n';
    }
    return out.str();
}

inline std::string format_comparison_csv(const std::vector<ComparisonRow>& rows,
                                         const std::vector<std::string>& comments = {}) {
    std::ostringstream out;
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "filter,precision,recall,f1\n";
    for (const auto& row : rows) {
        if (row.error) {
            out << row.name << ",,,\n";
            continue;
        }
        out << row.name << ',' << fmt_num(row.scores.precision, 6) << ',' << fmt_num(row.scores.recall, 6) << ','
            << fmt_num(row.scores.f1, 6) << '\n';
    }
    return out.str();
}

}  // namespace spikemon::eval
