#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "aquifer/features.hpp"

namespace aquifer {

enum class SgdLoss { Logistic, ModifiedHuber };
enum class ClassWeight { Balanced, None };

struct SgdConfig {
    SgdLoss loss = SgdLoss::Logistic;
    double l2_alpha = 1e-3;
    ClassWeight class_weight = ClassWeight::Balanced;
    int epochs = 5;
    double eta0 = 0.01;  // eta_t = eta0 / sqrt(t)
    std::uint64_t seed = 0;
    double default_threshold = 0.62;

    void validate() const;
};

struct RfConfig {
    int n_estimators = 500;
    int max_depth = 50;
    int min_samples_leaf = 2;
    int min_samples_split = 2;
    ClassWeight class_weight = ClassWeight::Balanced;
    bool bootstrap = true;  // tests may disable
    std::uint64_t seed = 0;
    double default_threshold = 0.39;

    void validate() const;
};

struct MlpConfig {
    std::vector<int> hidden_layer_sizes = {75, 25, 100, 20, 75, 25};
    int max_iter = 1000;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 256;
    double early_stop_tol = 1e-4;
    int patience = 10;
    ClassWeight class_weight = ClassWeight::Balanced;
    std::uint64_t seed = 0;
    double default_threshold = 0.46;

    void validate() const;
};

using TrainConfig = std::variant<SgdConfig, RfConfig, MlpConfig>;

// Per-column standardization learned on training rows (SGD and MLP only;
// forests consume raw features).
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> inv_std;  // 1 for near-constant columns

    void apply(const float* row, double* out) const;
};

// w_c = n / (2 * n_c); errors on single-class input.
std::pair<double, double> compute_balanced_weights(const std::vector<std::uint8_t>& labels);

class TrainedModel {
public:
    virtual ~TrainedModel() = default;
    virtual std::string kind() const = 0;
    virtual std::size_t feature_dim() const = 0;
    virtual double default_threshold() const = 0;

    // P{positive} per row, in [0,1].
    std::vector<double> predict_proba(const FeatureSource& X) const;
    std::vector<double> predict_proba(const FeatureMatrix& X) const {
        InMemoryFeatureSource src(X);
        return predict_proba(src);
    }

protected:
    // row is raw (unstandardized); implementations standardize internally.
    virtual double predict_row(const float* row) const = 0;
    friend struct ModelIoAccess;
};

struct LinearModel final : TrainedModel {
    SgdConfig config;
    Standardizer standardizer;
    std::vector<double> weights;
    double bias = 0.0;

    std::string kind() const override { return "linear"; }
    std::size_t feature_dim() const override { return weights.size(); }
    double default_threshold() const override { return config.default_threshold; }
    double decision(const float* row) const;

protected:
    double predict_row(const float* row) const override;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    float threshold = 0.0f;     // go left iff value <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double leaf_prob = 0.0;     // training fraction of positives at the leaf
};

struct ForestModel final : TrainedModel {
    RfConfig config;
    std::size_t n_features = 0;
    std::vector<std::vector<TreeNode>> trees;

    std::string kind() const override { return "forest"; }
    std::size_t feature_dim() const override { return n_features; }
    double default_threshold() const override { return config.default_threshold; }
    double tree_prob(const std::vector<TreeNode>& tree, const float* row) const;

protected:
    double predict_row(const float* row) const override;
};

struct MlpModel final : TrainedModel {
    MlpConfig config;
    Standardizer standardizer;
    std::size_t input_dim = 0;
    // layer l maps layer_sizes[l] -> layer_sizes[l+1]; weights row-major
    // (out x in); final layer has one sigmoid output unit.
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::string kind() const override { return "mlp"; }
    std::size_t feature_dim() const override { return input_dim; }
    double default_threshold() const override { return config.default_threshold; }

protected:
    double predict_row(const float* row) const override;
};

std::unique_ptr<LinearModel> train_sgd(const FeatureSource& X, const std::vector<std::uint8_t>& y,
                                       const SgdConfig& cfg);
std::unique_ptr<ForestModel> train_rf(const FeatureSource& X, const std::vector<std::uint8_t>& y,
                                      const RfConfig& cfg, int threads = 0);
std::unique_ptr<MlpModel> train_mlp(const FeatureSource& X, const std::vector<std::uint8_t>& y,
                                    const MlpConfig& cfg);

std::unique_ptr<TrainedModel> train(const FeatureSource& X, const std::vector<std::uint8_t>& y,
                                    const TrainConfig& cfg, int threads = 0);

// Versioned container: one-line JSON metadata + binary parameter payload.
void save_model(const TrainedModel& model, const std::string& path);
std::unique_ptr<TrainedModel> load_model(const std::string& path);

}  // namespace aquifer
