#include <cmath>
#include <numeric>

#include "aquifer/rng.hpp"
#include "train_util.hpp"

namespace aquifer {

namespace {

// d(loss)/d(score) for label y in {-1, +1}.
double logistic_dloss(double score, double y) {
    // loss = log(1 + exp(-y*s))
    return -y / (1.0 + std::exp(y * score));
}

double modified_huber_dloss(double score, double y) {
    const double z = y * score;
    if (z >= 1.0) return 0.0;
    if (z >= -1.0) return -2.0 * (1.0 - z) * y;
    return -4.0 * y;
}

}  // namespace

std::unique_ptr<LinearModel> train_sgd(const FeatureSource& X, const std::vector<std::uint8_t>& y,
                                       const SgdConfig& cfg) {
    cfg.validate();
    detail::check_training_inputs(X, y);

    auto model = std::make_unique<LinearModel>();
    model->config = cfg;
    model->standardizer = detail::fit_standardizer(X);

    const std::size_t n = X.rows(), d = X.cols();
    model->weights.assign(d, 0.0);
    std::vector<double>& w = model->weights;
    double& b = model->bias;

    const auto [w0, w1] = detail::class_weights_for(cfg.class_weight, y);

    Rng order_rng = Rng(cfg.seed).split(0);
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);

    std::vector<float> raw(d);
    std::vector<double> x(d);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(indices);
        for (std::size_t idx : indices) {
            X.read_row(idx, raw.data());
            model->standardizer.apply(raw.data(), x.data());

            double score = b;
            for (std::size_t j = 0; j < d; ++j) score += w[j] * x[j];

            const double ylabel = y[idx] ? 1.0 : -1.0;
            const double cw = y[idx] ? w1 : w0;
            const double g = cw * (cfg.loss == SgdLoss::Logistic ? logistic_dloss(score, ylabel)
                                                                 : modified_huber_dloss(score, ylabel));
            ++t;
            const double eta = cfg.eta0 / std::sqrt(static_cast<double>(t));
            for (std::size_t j = 0; j < d; ++j) w[j] -= eta * (g * x[j] + cfg.l2_alpha * w[j]);
            b -= eta * g;  // bias unregularized
        }
    }

    for (double v : w)
        if (!std::isfinite(v)) throw TrainingDivergedError("SGD weights became non-finite", cfg.epochs);
    return model;
}

}  // namespace aquifer
