#include "aquifer/learners.hpp"

#include <cmath>

namespace aquifer {

void SgdConfig::validate() const {
    if (l2_alpha < 0) throw ConfigError("l2_alpha must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(eta0 > 0)) throw ConfigError("eta0 must be positive");
}

void RfConfig::validate() const {
    if (n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
}

void MlpConfig::validate() const {
    if (hidden_layer_sizes.empty()) throw ConfigError("MLP needs at least one hidden layer");
    for (int s : hidden_layer_sizes)
        if (s < 1) throw ConfigError("every hidden layer size must be >= 1");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (patience < 1) throw ConfigError("patience must be >= 1");
}

void Standardizer::apply(const float* row, double* out) const {
    for (std::size_t i = 0; i < mean.size(); ++i)
        out[i] = (static_cast<double>(row[i]) - mean[i]) * inv_std[i];
}

std::pair<double, double> compute_balanced_weights(const std::vector<std::uint8_t>& labels) {
    std::size_t n0 = 0, n1 = 0;
    for (std::uint8_t y : labels) (y ? n1 : n0)++;
    if (n0 == 0 || n1 == 0)
        throw DegenerateLabelsError("balanced weights need both classes present");
    const double n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(n0)), n / (2.0 * static_cast<double>(n1))};
}

std::vector<double> TrainedModel::predict_proba(const FeatureSource& X) const {
    if (X.cols() != feature_dim())
        throw ShapeError("feature width " + std::to_string(X.cols()) +
                         " does not match model feature_dim " + std::to_string(feature_dim()));
    const std::size_t n = X.rows();
    const std::size_t chunk = std::max<std::size_t>(1, 65536 / std::max<std::size_t>(1, X.cols()));
    std::vector<float> buf(chunk * X.cols());
    std::vector<double> out(n);
    for (std::size_t first = 0; first < n; first += chunk) {
        const std::size_t count = std::min(chunk, n - first);
        X.read_rows(first, count, buf.data());
        for (std::size_t i = 0; i < count; ++i)
            out[first + i] = predict_row(buf.data() + i * X.cols());
    }
    return out;
}

namespace {
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

double LinearModel::decision(const float* row) const {
    std::vector<double> z(weights.size());
    standardizer.apply(row, z.data());
    double s = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * z[i];
    return s;
}

double LinearModel::predict_row(const float* row) const {
    const double s = decision(row);
    if (config.loss == SgdLoss::Logistic) return sigmoid(s);
    // Modified Huber calibration: clipped linear map of the margin score.
    const double clipped = std::min(1.0, std::max(-1.0, s));
    return (clipped + 1.0) / 2.0;
}

double ForestModel::tree_prob(const std::vector<TreeNode>& tree, const float* row) const {
    std::int32_t node = 0;
    while (tree[node].feature >= 0) {
        node = (row[tree[node].feature] <= tree[node].threshold) ? tree[node].left
                                                                 : tree[node].right;
    }
    return tree[node].leaf_prob;
}

double ForestModel::predict_row(const float* row) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree_prob(tree, row);
    return sum / static_cast<double>(trees.size());
}

double MlpModel::predict_row(const float* row) const {
    std::vector<double> a(input_dim);
    standardizer.apply(row, a.data());
    std::vector<double> next;
    std::size_t in_dim = input_dim;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const std::size_t out_dim = biases[l].size();
        next.assign(out_dim, 0.0);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double z = biases[l][o];
            const double* wrow = weights[l].data() + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) z += wrow[i] * a[i];
            next[o] = (l + 1 == weights.size()) ? sigmoid(z) : std::max(0.0, z);
        }
        a.swap(next);
        in_dim = out_dim;
    }
    return a[0];
}

std::unique_ptr<TrainedModel> train(const FeatureSource& X, const std::vector<std::uint8_t>& y,
                                    const TrainConfig& cfg, int threads) {
    if (std::holds_alternative<SgdConfig>(cfg)) return train_sgd(X, y, std::get<SgdConfig>(cfg));
    if (std::holds_alternative<RfConfig>(cfg)) return train_rf(X, y, std::get<RfConfig>(cfg), threads);
    return train_mlp(X, y, std::get<MlpConfig>(cfg));
}

}  // namespace aquifer
