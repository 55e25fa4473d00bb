#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spikemon/error.hpp"
#include "spikemon/pipeline/filter.hpp"

namespace spikemon::classifier {

struct SampleFeature {
    std::string sample_id;
    std::vector<double> feature;  // per-neuron mean filtered rate over the window [Hz]
    int label = 0;
};

// Time-averaged output-synapse activity of every neuron while the layers in
// `window` are presented. Uses the first ensemble only.
inline SampleFeature encode_sample(const SignalSeries& series, const nef::Ensemble& ensemble, const FilterConfig& cfg,
                                   LayerWindow window = {613, 621}) {
    if (window.empty()) throw InputError("encode_sample: empty window");
    if (series.empty() || series.first_layer() > window.first || series.last_layer() < window.last)
        throw InputError("encode_sample: series does not cover layers " + std::to_string(window.first) + "-" +
                         std::to_string(window.last));
    FilterConfig single = cfg;
    single.stages = 1;
    single.neurons = ensemble.n_neurons;
    auto run = run_filter(series, single, {ensemble}, window);
    SampleFeature f;
    f.feature = std::move(run.mean_activity);
    return f;
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p = logits;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double m = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

inline constexpr double kProbFloor = 1e-12;

// Mean categorical cross-entropy L = -(1/N) sum_i sum_j y_ij log p_ij.
// Zero probabilities on a true class are clamped to kProbFloor; `clamped` reports it.
inline double cross_entropy(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& labels, bool* clamped = nullptr) {
    if (probs.rows() != labels.rows() || probs.cols() != labels.cols() || probs.rows() == 0)
        throw InputError("cross_entropy: shape mismatch");
    if (clamped) *clamped = false;
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        if (std::abs(probs.row(i).sum() - 1.0) > 1e-6) throw InputError("cross_entropy: probability rows must sum to 1");
        int hot = 0;
        for (Eigen::Index j = 0; j < probs.cols(); ++j) {
            const double p = probs(i, j), y = labels(i, j);
            if (!(p >= 0.0 && p <= 1.0)) throw InputError("cross_entropy: probabilities must lie in [0, 1]");
            if (y != 0.0 && y != 1.0) throw InputError("cross_entropy: labels must be one-hot");
            if (y == 1.0) {
                ++hot;
                if (p < kProbFloor && clamped) *clamped = true;
                total -= std::log(std::max(p, kProbFloor));
            }
        }
        if (hot != 1) throw InputError("cross_entropy: labels must be one-hot");
    }
    return total / static_cast<double>(probs.rows());
}

// d L / d logits for softmax outputs.
inline Eigen::MatrixXd cross_entropy_logit_gradient(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& labels) {
    return (softmax_rows(logits) - labels) / static_cast<double>(logits.rows());
}

inline Eigen::MatrixXd one_hot(const std::vector<int>& labels, int classes) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) throw InputError("one_hot: label out of range");
        y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return y;
}

struct ClassifierModel {
    Eigen::MatrixXd weights;  // classes x features, applied to raw features
    Eigen::VectorXd biases;
    std::vector<double> training_history;  // loss before training, then after every epoch

    int classes() const { return static_cast<int>(biases.size()); }
};

struct TrainOptions {
    int epochs = 1000;
    double lr = 0.05;
};

inline Eigen::VectorXd predict(const ClassifierModel& m, const std::vector<double>& feature) {
    if (static_cast<Eigen::Index>(feature.size()) != m.weights.cols())
        throw InputError("predict: feature length " + std::to_string(feature.size()) + " does not match model (" +
                         std::to_string(m.weights.cols()) + ")");
    const Eigen::Map<const Eigen::VectorXd> x(feature.data(), static_cast<Eigen::Index>(feature.size()));
    const Eigen::MatrixXd logits = (m.weights * x + m.biases).transpose();
    return softmax_rows(logits).row(0).transpose();
}

inline int predict_label(const ClassifierModel& m, const std::vector<double>& feature) {
    Eigen::Index arg = 0;
    predict(m, feature).maxCoeff(&arg);
    return static_cast<int>(arg);
}

// Full-batch gradient descent on a linear softmax readout. Features are centered and
// scaled internally (per feature by its spread, globally by 1/sqrt(active features));
// the affine map is folded back so the returned model acts on raw features.
inline ClassifierModel train_classifier(const std::vector<SampleFeature>& samples, const TrainOptions& opt = {}) {
    if (samples.empty()) throw InputError("train: no samples");
    if (opt.epochs < 0 || !(opt.lr >= 0.0)) throw ConfigError("train: epochs and lr must be non-negative");
    const auto dim = samples.front().feature.size();
    if (dim == 0) throw InputError("train: empty features");
    int classes = 0;
    std::vector<int> labels;
    for (const auto& s : samples) {
        if (s.feature.size() != dim) throw InputError("train: inconsistent feature lengths");
        if (s.label < 0) throw InputError("train: negative label");
        classes = std::max(classes, s.label + 1);
        labels.push_back(s.label);
    }
    if (classes < 2) throw InputError("train: need at least two classes");

    const auto n = static_cast<Eigen::Index>(samples.size());
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = samples[static_cast<std::size_t>(i)].feature[static_cast<std::size_t>(j)];

    const Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::RowVectorXd scale(d);
    Eigen::Index active = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double sd = std::sqrt((x.col(j).array() - mean(j)).square().mean());
        scale(j) = sd > 1e-12 * std::max(1.0, std::abs(mean(j))) ? 1.0 / sd : 0.0;
        if (scale(j) != 0.0) ++active;
    }
    if (active > 0) scale /= std::sqrt(static_cast<double>(active));
    const Eigen::MatrixXd z = (x.rowwise() - mean).array().rowwise() * scale.array();
    const Eigen::MatrixXd y = one_hot(labels, classes);

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(classes, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(classes);
    auto logits_of = [&] { return Eigen::MatrixXd((z * w.transpose()).rowwise() + b.transpose()); };

    ClassifierModel m;
    const double initial = cross_entropy(softmax_rows(logits_of()), y);
    m.training_history.push_back(initial);
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        const Eigen::MatrixXd g = cross_entropy_logit_gradient(logits_of(), y);
        w -= opt.lr * g.transpose() * z;
        b -= opt.lr * g.colwise().sum().transpose();
        const double loss = cross_entropy(softmax_rows(logits_of()), y);
        if (!std::isfinite(loss) || loss > 10.0 * initial) {
            std::ostringstream msg;
            msg << "train: diverged at epoch " << epoch + 1 << " (loss " << loss << ", initial " << initial
                << ", lr " << opt.lr << ")";
            throw NumericError(msg.str());
        }
        m.training_history.push_back(loss);
    }

    // logits = W ((x - mean) .* scale) + b  =  (W diag(scale)) x + (b - W diag(scale) mean)
    m.weights = w.array().rowwise() * scale.array();
    m.biases = b - m.weights * mean.transpose();
    return m;
}

}  // namespace spikemon::classifier
