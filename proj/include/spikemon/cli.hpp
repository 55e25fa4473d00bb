#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "spikemon/baselines.hpp"
#include "spikemon/classifier.hpp"
#include "spikemon/datagen.hpp"
#include "spikemon/energy.hpp"
#include "spikemon/error.hpp"
#include "spikemon/eval.hpp"
#include "spikemon/io.hpp"
#include "spikemon/pipeline/detect.hpp"
#include "spikemon/pipeline/filter.hpp"
#include "spikemon/pipeline/series.hpp"

namespace spikemon::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2 };

inline constexpr const char* kOutDirEnv = "SPIKEMON_OUT_DIR";
inline constexpr std::uint64_t kDefaultSeed = 42;

// Baseline settings used by `compare` when the config has no "baseline" list.
inline std::vector<baselines::FilterSpec> default_baseline_specs() {
    using baselines::Kind;
    baselines::FilterSpec sg{Kind::SavitzkyGolay};
    sg.window = 5;
    sg.polyorder = 2;
    baselines::FilterSpec bw{Kind::Butterworth};
    bw.cutoff = 0.5;
    bw.order = 2;
    baselines::FilterSpec ma{Kind::MovingAverage};
    ma.window = 3;
    baselines::FilterSpec ga{Kind::Gaussian};
    ga.sigma = 0.75;
    return {sg, bw, ma, ga};
}

// "adaptive", "adaptive:6", "fixed:5"
inline FlagPolicy parse_policy(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    std::optional<double> value;
    if (colon != std::string::npos) {
        try {
            value = std::stod(text.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad policy value in '" + text + "'");
        }
    }
    if (kind == "fixed") return FlagPolicy::fixed(value.value_or(5.0));
    if (kind == "adaptive") return FlagPolicy::adaptive(value.value_or(6.0));
    throw ConfigError("unknown policy '" + text + "' (expected fixed:<pct> or adaptive:<k>)");
}

inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + item + "' in list");
        }
    }
    return out;
}

inline LayerWindow parse_window(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("window must be FIRST:LAST");
    try {
        return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ConfigError("window must be FIRST:LAST");
    }
}

// Options shared by every subcommand.
struct Common {
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string preset;
    std::string config_path;

    void attach(CLI::App* app, const std::string& default_preset) {
        preset = default_preset;
        app->add_option("--out", out_dir, "Output directory (default: $SPIKEMON_OUT_DIR or .)");
        app->add_option("--seed", seed, "Random seed (default 42)");
        app->add_option("--preset", preset, "Named filter preset, e.g. cpu-pd1-66")->capture_default_str();
        app->add_option("--config", config_path, "Filter config JSON (overrides the preset)");
    }

    std::uint64_t seed_value() const { return seed.value_or(kDefaultSeed); }

    fs::path output_dir() const {
        if (!out_dir.empty()) return out_dir;
        if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
        return ".";
    }

    json config_json() const {
        if (config_path.empty()) return json::object();
        try {
            return json::parse(read_file(config_path));
        } catch (const json::parse_error& e) {
            throw ParseError(config_path + ": " + e.what());
        }
    }

    FilterConfig filter_config() const {
        auto j = config_json();
        FilterConfig base = preset.empty() ? FilterConfig{} : spikemon::preset(preset);
        if (j.contains("preset")) base = spikemon::preset(j.at("preset").get<std::string>());
        auto cfg = filter_config_from_json(j, base);
        if (seed || !j.contains("seed")) cfg.seed = seed_value();
        return cfg;
    }

    std::string preset_label() const {
        auto j = config_json();
        if (j.contains("preset")) return j.at("preset").get<std::string>();
        if (!config_path.empty()) return preset.empty() ? "custom" : preset + "+config";
        return preset.empty() ? "none" : preset;
    }
};

inline std::string header_line(const std::string& command, std::uint64_t seed, const std::string& preset) {
    return std::string("spikemon ") + kVersion + " command=" + command + " seed=" + std::to_string(seed) +
           " preset=" + preset;
}

inline json meta_json(const std::string& command, std::uint64_t seed, const std::string& preset) {
    return json{{"tool", "spikemon"}, {"version", kVersion}, {"command", command}, {"seed", seed}, {"preset", preset}};
}

inline void emit(std::ostream& out, const fs::path& path, const std::string& content) {
    write_file_atomic(path, content);
    out << "wrote " << path.string() << '\n';
}

inline SignalSeries load_required(const std::string& path, Condition condition) {
    auto s = load_layer_series(path);
    s.condition = condition;
    return s;
}

inline eval::GroundTruth load_truth(const std::string& path) {
    try {
        return eval::truth_from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline json scores_json(const DetectionScores& s) {
    return json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

// The six synthetic PD1 samples priced by `energy`: S1/S2/S3 = 33/66/100 % reduction,
// V3/V7 = defect length in layers. S2V7 is the calibration reference.
struct EnergySample {
    std::string name;
    SignalSeries series;
};

inline std::vector<EnergySample> synthetic_energy_samples(std::uint64_t seed) {
    std::vector<EnergySample> out;
    const double reductions[] = {33.0, 66.0, 100.0};
    for (int s = 0; s < 3; ++s) {
        for (int layers : {3, 7}) {
            auto p = GenParams::for_sensor(Sensor::PD1, seed + 1);
            DefectSpec d;
            d.n_layers = layers;
            d.power_reduction_percent = reductions[s];
            out.push_back({"S" + std::to_string(s + 1) + "V" + std::to_string(layers), gen_defective(p, d)});
        }
    }
    return out;
}

inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spiking-network filtering and anomaly detection for layer-wise sensor series", "spikemon"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate synthetic healthy/defective series and ground truth");
    Common gen_c;
    gen_c.attach(gen, "");
    std::string g_sensor = "PD1", g_location = "BL";
    double g_reduction = 66.0, g_dip = 1.0, g_baseline = 1000.0, g_amp = 600.0;
    std::optional<double> g_noise;
    int g_layers = 7, g_start = 613, g_first = 570, g_last = 650, g_period = 8;
    bool g_matched = false;
    gen->add_option("--sensor", g_sensor, "PD1, PD2 or BD")
        ->check(CLI::IsMember({"PD1", "PD2", "BD", "pd1", "pd2", "bd"}))
        ->capture_default_str();
    gen->add_option("--reduction", g_reduction, "Laser power reduction [%]")->capture_default_str();
    gen->add_option("--layers", g_layers, "Number of defect layers")->capture_default_str();
    gen->add_option("--start", g_start, "First defect layer")->capture_default_str();
    gen->add_option("--first", g_first, "First layer of the series")->capture_default_str();
    gen->add_option("--last", g_last, "Last layer of the series")->capture_default_str();
    gen->add_option("--noise-std", g_noise, "Noise standard deviation (default by sensor)");
    gen->add_option("--baseline", g_baseline, "Baseline level")->capture_default_str();
    gen->add_option("--junction-period", g_period, "Layers between junction spikes")->capture_default_str();
    gen->add_option("--junction-amplitude", g_amp, "Junction spike amplitude")->capture_default_str();
    gen->add_option("--dip-fraction", g_dip, "Fractional drop per unit power reduction")->capture_default_str();
    gen->add_option("--location", g_location, "Sensor patch location: BL, BR, TL, TR")
        ->check(CLI::IsMember({"BL", "BR", "TL", "TR"}))
        ->capture_default_str();
    gen->add_flag("--matched", g_matched, "Use the healthy noise draw for the defective build too");

    // detect
    auto* det = app.add_subcommand("detect", "Filter both series, compute deviation and flag anomalous layers");
    Common det_c;
    det_c.attach(det, "cpu-pd1-66");
    std::string d_healthy, d_defective, d_truth, d_policy = "adaptive:6";
    det->add_option("--healthy", d_healthy, "Healthy series CSV")->required();
    det->add_option("--defective", d_defective, "Defective series CSV")->required();
    det->add_option("--truth", d_truth, "Ground-truth JSON (adds precision/recall/F1)");
    det->add_option("--policy", d_policy, "fixed:<pct> or adaptive:<k>")->capture_default_str();

    // sweep
    auto* swp = app.add_subcommand("sweep", "F1 across synaptic time constants");
    Common swp_c;
    swp_c.attach(swp, "cpu-pd1-66");
    std::string s_healthy, s_defective, s_truth, s_policy = "adaptive:6";
    std::string s_taus = "0.0001,0.0005,0.001,0.002,0.003,0.004,0.005,0.006,0.008,0.01,0.02,0.05,0.1";
    swp->add_option("--healthy", s_healthy, "Healthy series CSV")->required();
    swp->add_option("--defective", s_defective, "Defective series CSV")->required();
    swp->add_option("--truth", s_truth, "Ground-truth JSON")->required();
    swp->add_option("--taus", s_taus, "Comma-separated time constants [s]")->capture_default_str();
    swp->add_option("--policy", s_policy, "fixed:<pct> or adaptive:<k>")->capture_default_str();

    // compare
    auto* cmp = app.add_subcommand("compare", "Classical filters vs the SNN filter");
    Common cmp_c;
    cmp_c.attach(cmp, "cpu-pd1-66");
    std::string c_healthy, c_defective, c_truth, c_policy = "adaptive:6";
    cmp->add_option("--healthy", c_healthy, "Healthy series CSV")->required();
    cmp->add_option("--defective", c_defective, "Defective series CSV")->required();
    cmp->add_option("--truth", c_truth, "Ground-truth JSON")->required();
    cmp->add_option("--policy", c_policy, "fixed:<pct> or adaptive:<k>")->capture_default_str();

    // raster
    auto* ras = app.add_subcommand("raster", "Spike raster of the filter ensemble for one series");
    Common ras_c;
    ras_c.attach(ras, "cpu-pd1-66");
    std::string r_input;
    ras->add_option("--input", r_input, "Series CSV")->required();

    // classify
    auto* cls = app.add_subcommand("classify", "Train the softmax readout on per-sample ensemble activity");
    Common cls_c;
    cls_c.attach(cls, "cpu-pd1-66");
    std::string k_manifest, k_window = "613:621";
    classifier::TrainOptions k_opt;
    cls->add_option("--manifest", k_manifest, "JSON list of {path, label[, id]}")->required();
    cls->add_option("--epochs", k_opt.epochs, "Training epochs")->capture_default_str();
    cls->add_option("--lr", k_opt.lr, "Learning rate")->capture_default_str();
    cls->add_option("--window", k_window, "Feature window FIRST:LAST (layers)")->capture_default_str();

    // energy
    auto* eng = app.add_subcommand("energy", "Per-inference energy across hardware profiles");
    Common eng_c;
    eng_c.attach(eng, "cpu-pd1-66");
    std::string e_profiles, e_manifest;
    eng->add_option("--profiles", e_profiles, "Profiles JSON (default: calibrated reference profiles)");
    eng->add_option("--manifest", e_manifest, "JSON list of {name, path} samples (default: synthetic S1V3..S3V7)");

    try {
        std::vector<const char*> argv;
        argv.push_back("spikemon");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*gen) {
            auto p = GenParams::for_sensor(parse_sensor(g_sensor), gen_c.seed_value());
            p.layer_first = g_first;
            p.layer_last = g_last;
            if (g_noise) p.noise_std = *g_noise;
            p.baseline_level = g_baseline;
            p.junction_period = g_period;
            p.junction_spike_amplitude = g_amp;
            if (g_location == "BL") p.patch_location = PatchLocation::BL;
            else if (g_location == "BR") p.patch_location = PatchLocation::BR;
            else if (g_location == "TL") p.patch_location = PatchLocation::TL;
            else if (g_location == "TR") p.patch_location = PatchLocation::TR;
            else throw ConfigError("unknown location '" + g_location + "'");
            DefectSpec d;
            d.start_layer = g_start;
            d.n_layers = g_layers;
            d.power_reduction_percent = g_reduction;
            d.dip_fraction = g_dip;

            const auto healthy = gen_healthy(p);
            auto pd = p;
            if (!g_matched) pd.seed = p.seed + 1;
            const auto defective = gen_defective(pd, d);
            eval::GroundTruth truth;
            truth.defect_layers = d.layers();
            truth.window_first = p.layer_first;
            truth.window_last = p.layer_last;

            const auto head = header_line("gen-data", gen_c.seed_value(), "none");
            const std::string desc = "sensor=" + to_string(p.sensor) + " location=" + to_string(p.patch_location) +
                                     " reduction=" + fmt_num(d.power_reduction_percent) +
                                     " defect_layers=" + std::to_string(d.n_layers);
            const auto dir = gen_c.output_dir();
            emit(out, dir / "healthy.csv", format_layer_series(healthy, {head, desc + " condition=healthy"}));
            emit(out, dir / "defective.csv", format_layer_series(defective, {head, desc + " condition=defective"}));
            json tj = truth;
            tj["meta"] = meta_json("gen-data", gen_c.seed_value(), "none");
            emit(out, dir / "truth.json", tj.dump(2) + "\n");
            return kOk;
        }

        if (*det) {
            const auto cfg = det_c.filter_config();
            const auto healthy = load_required(d_healthy, Condition::Healthy);
            const auto defective = load_required(d_defective, Condition::Defective);
            std::optional<eval::GroundTruth> truth;
            if (!d_truth.empty()) truth = load_truth(d_truth);
            const auto report = eval::detect(defective, healthy, cfg, parse_policy(d_policy), truth);

            json j;
            j["meta"] = meta_json("detect", cfg.seed, det_c.preset_label());
            j["config"] = cfg;
            j["policy"] = to_string(report.policy.kind);
            if (report.policy.kind == PolicyKind::Adaptive) {
                j["k"] = report.policy.k;
                j["calibration_layers"] = {
                    report.policy.calibration_first.value_or(report.deviations.values.begin()->first),
                    report.policy.calibration_last};
                j["calibration_mad"] = report.calibration_mad;
                j["fallback_used"] = report.fallback_used;
            }
            j["threshold_used"] = report.threshold_used;
            j["flagged_layers"] = std::vector<int>(report.flagged_layers.begin(), report.flagged_layers.end());
            j["metrics"] = report.metrics ? scores_json(*report.metrics) : json(nullptr);

            std::ostringstream dev;
            dev << "# " << header_line("detect", cfg.seed, det_c.preset_label()) << '\n';
            dev << "layer,deviation_percent,flagged\n";
            for (const auto& [layer, v] : report.deviations.values)
                dev << layer << ',' << (v ? fmt_num(*v, 8) : "") << ','
                    << (report.flagged_layers.count(layer) ? 1 : 0) << '\n';

            const auto dir = det_c.output_dir();
            emit(out, dir / "report.json", j.dump(2) + "\n");
            emit(out, dir / "deviation.csv", dev.str());
            if (report.metrics)
                out << "precision=" << fmt_num(report.metrics->precision, 4)
                    << " recall=" << fmt_num(report.metrics->recall, 4) << " f1=" << fmt_num(report.metrics->f1, 4)
                    << '\n';
            return kOk;
        }

        if (*swp) {
            const auto cfg = swp_c.filter_config();
            const auto result = eval::sweep_tau(load_required(s_defective, Condition::Defective),
                                                load_required(s_healthy, Condition::Healthy), parse_list(s_taus), cfg,
                                                load_truth(s_truth), parse_policy(s_policy));
            emit(out, swp_c.output_dir() / "sweep.csv",
                 eval::format_sweep_csv(result, {header_line("sweep", cfg.seed, swp_c.preset_label()),
                                                 "best_tau=" + fmt_num(result.best_tau)}));
            return kOk;
        }

        if (*cmp) {
            const auto cfg = cmp_c.filter_config();
            const auto j = cmp_c.config_json();
            std::vector<baselines::FilterSpec> specs = default_baseline_specs();
            if (j.contains("baseline")) {
                specs.clear();
                for (const auto& s : j.at("baseline")) specs.push_back(baselines::spec_from_json(s));
            }
            const auto rows = eval::compare_filters(load_required(c_defective, Condition::Defective),
                                                    load_required(c_healthy, Condition::Healthy), specs, cfg,
                                                    load_truth(c_truth), parse_policy(c_policy));
            emit(out, cmp_c.output_dir() / "compare.csv",
                 eval::format_comparison_csv(rows, {header_line("compare", cfg.seed, cmp_c.preset_label())}));
            return kOk;
        }

        if (*ras) {
            const auto cfg = ras_c.filter_config();
            const auto run = run_filter(load_layer_series(r_input), cfg, build_stage_ensembles(cfg));
            std::ostringstream csv;
            csv << "# " << header_line("raster", cfg.seed, ras_c.preset_label()) << '\n';
            csv << "# dt=" << fmt_num(cfg.dt) << " steps=" << run.raster.steps << " steps_per_layer="
                << run.steps_per_layer << " first_layer=" << run.filtered.first_layer() << '\n';
            csv << "neuron,time\n";
            for (const auto& ev : run.raster.events) csv << ev.neuron << ',' << fmt_num(run.raster.time(ev), 10) << '\n';
            emit(out, ras_c.output_dir() / "raster.csv", csv.str());
            return kOk;
        }

        if (*cls) {
            const auto cfg = cls_c.filter_config();
            const auto window = parse_window(k_window);
            const json manifest = [&] {
                try {
                    return json::parse(read_file(k_manifest));
                } catch (const json::parse_error& e) {
                    throw ParseError(k_manifest + ": " + e.what());
                }
            }();
            const auto& list = manifest.is_object() && manifest.contains("samples") ? manifest.at("samples") : manifest;
            if (!list.is_array() || list.empty()) throw ParseError(k_manifest + ": expected a non-empty sample list");

            const auto base = fs::path(k_manifest).parent_path();
            FilterConfig single = cfg;
            single.stages = 1;
            const auto ensemble = build_stage_ensembles(single).front();
            std::vector<classifier::SampleFeature> samples;
            for (const auto& entry : list) {
                std::string path;
                int label = 0;
                try {
                    path = entry.at("path").get<std::string>();
                    label = entry.at("label").get<int>();
                } catch (const json::exception& e) {
                    throw ParseError(k_manifest + ": " + e.what());
                }
                fs::path p = path;
                if (p.is_relative() && !base.empty()) p = base / p;
                auto f = classifier::encode_sample(load_layer_series(p), ensemble, single, window);
                f.sample_id = entry.value("id", fs::path(path).stem().string());
                f.label = label;
                samples.push_back(std::move(f));
            }
            const auto model = classifier::train_classifier(samples, k_opt);

            const auto head = header_line("classify", cfg.seed, cls_c.preset_label());
            std::ostringstream loss;
            loss << "# " << head << '\n' << "epoch,loss\n";
            for (std::size_t e = 0; e < model.training_history.size(); ++e)
                loss << e << ',' << fmt_num(model.training_history[e], 10) << '\n';
            std::ostringstream pred;
            pred << "# " << head << '\n' << "sample,target,predicted\n";
            int correct = 0;
            for (const auto& s : samples) {
                const int p = classifier::predict_label(model, s.feature);
                correct += p == s.label;
                pred << s.sample_id << ',' << s.label << ',' << p << '\n';
            }
            const auto dir = cls_c.output_dir();
            emit(out, dir / "loss.csv", loss.str());
            emit(out, dir / "predictions.csv", pred.str());
            out << "accuracy=" << fmt_num(100.0 * correct / static_cast<double>(samples.size()), 4) << "%\n";
            return kOk;
        }

        if (*eng) {
            const auto cfg = eng_c.filter_config();
            const auto ensembles = build_stage_ensembles(cfg);
            const auto synthetic = synthetic_energy_samples(cfg.seed);

            std::vector<energy::HardwareEnergyProfile> profiles;
            if (!e_profiles.empty()) {
                try {
                    profiles = energy::profiles_from_json(json::parse(read_file(e_profiles)));
                } catch (const json::parse_error& e) {
                    throw ParseError(e_profiles + ": " + e.what());
                }
            } else {
                const auto& reference = synthetic[3];  // S2V7
                profiles = energy::reference_profiles(energy::count_ops(run_filter(reference.series, cfg, ensembles)));
            }

            std::vector<EnergySample> samples;
            if (e_manifest.empty()) {
                samples = synthetic;
            } else {
                json m;
                try {
                    m = json::parse(read_file(e_manifest));
                } catch (const json::parse_error& e) {
                    throw ParseError(e_manifest + ": " + e.what());
                }
                const auto base = fs::path(e_manifest).parent_path();
                for (const auto& entry : m) {
                    fs::path p = entry.at("path").get<std::string>();
                    if (p.is_relative() && !base.empty()) p = base / p;
                    samples.push_back({entry.value("name", p.stem().string()), load_layer_series(p)});
                }
            }

            std::vector<energy::EnergyRow> rows;
            for (const auto& s : samples) {
                energy::EnergyRow row;
                row.sample = s.name;
                row.counts = energy::count_ops(run_filter(s.series, cfg, ensembles));
                for (const auto& p : profiles) row.microjoules.push_back(energy::estimate_energy(row.counts, p));
                rows.push_back(row);
            }
            const auto head = header_line("energy", cfg.seed, eng_c.preset_label());
            const auto dir = eng_c.output_dir();
            emit(out, dir / "energy.csv", energy::format_energy_csv(profiles, rows, {head, "unit=uJ/inference"}));
            json pj;
            pj["meta"] = meta_json("energy", cfg.seed, eng_c.preset_label());
            pj["profiles"] = profiles;
            emit(out, dir / "profiles.json", pj.dump(2) + "\n");
            return kOk;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsage;
}

inline int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, out, err);
}

}  // namespace spikemon::cli
