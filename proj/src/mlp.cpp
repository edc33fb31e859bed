#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aquifer/mlp_net.hpp"
#include "train_util.hpp"

namespace aquifer {

namespace {
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

MlpNet MlpNet::initialize(std::size_t input_dim, const std::vector<int>& hidden, Rng& rng) {
    MlpNet net;
    net.sizes.push_back(input_dim);
    for (int h : hidden) net.sizes.push_back(static_cast<std::size_t>(h));
    net.sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
        const std::size_t fan_in = net.sizes[l], fan_out = net.sizes[l + 1];
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));  // He init
        std::vector<double> w(fan_out * fan_in);
        for (double& v : w) v = scale * rng.next_gaussian();
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

double MlpNet::forward(const double* x) const {
    std::vector<double> a(x, x + sizes[0]);
    std::vector<double> next;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const std::size_t in_dim = sizes[l], out_dim = sizes[l + 1];
        next.assign(out_dim, 0.0);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double z = biases[l][o];
            const double* wrow = weights[l].data() + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) z += wrow[i] * a[i];
            next[o] = (l + 1 == weights.size()) ? sigmoid(z) : std::max(0.0, z);
        }
        a.swap(next);
    }
    return a[0];
}

double MlpNet::loss(const std::vector<double>& X, const std::vector<std::uint8_t>& y,
                    double w0, double w1,
                    std::vector<std::vector<double>>* grads_w,
                    std::vector<std::vector<double>>* grads_b) const {
    const std::size_t n = y.size();
    const std::size_t layers = weights.size();
    if (grads_w) {
        grads_w->resize(layers);
        grads_b->resize(layers);
        for (std::size_t l = 0; l < layers; ++l) {
            (*grads_w)[l].assign(weights[l].size(), 0.0);
            (*grads_b)[l].assign(biases[l].size(), 0.0);
        }
    }

    // Activations per layer, kept for backprop.
    std::vector<std::vector<double>> act(layers + 1);
    std::vector<std::vector<double>> delta(layers);

    double total = 0.0;
    const double eps = 1e-12;
    for (std::size_t s = 0; s < n; ++s) {
        act[0].assign(X.begin() + static_cast<std::ptrdiff_t>(s * sizes[0]),
                      X.begin() + static_cast<std::ptrdiff_t>((s + 1) * sizes[0]));
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t in_dim = sizes[l], out_dim = sizes[l + 1];
            act[l + 1].assign(out_dim, 0.0);
            for (std::size_t o = 0; o < out_dim; ++o) {
                double z = biases[l][o];
                const double* wrow = weights[l].data() + o * in_dim;
                for (std::size_t i = 0; i < in_dim; ++i) z += wrow[i] * act[l][i];
                act[l + 1][o] = (l + 1 == layers) ? sigmoid(z) : std::max(0.0, z);
            }
        }

        const double p = act[layers][0];
        const double cw = y[s] ? w1 : w0;
        total += -cw * (y[s] ? std::log(p + eps) : std::log(1.0 - p + eps));
        if (!grads_w) continue;

        // Output delta for sigmoid + cross-entropy; the eps in the loss is a
        // numerical guard, the gradient uses the exact composite form.
        delta[layers - 1].assign(1, cw * (p - (y[s] ? 1.0 : 0.0)) / static_cast<double>(n));
        for (std::size_t l = layers; l-- > 0;) {
            const std::size_t in_dim = sizes[l], out_dim = sizes[l + 1];
            auto& gw = (*grads_w)[l];
            auto& gb = (*grads_b)[l];
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double dz = delta[l][o];
                gb[o] += dz;
                double* grow = gw.data() + o * in_dim;
                for (std::size_t i = 0; i < in_dim; ++i) grow[i] += dz * act[l][i];
            }
            if (l == 0) break;
            delta[l - 1].assign(sizes[l], 0.0);
            for (std::size_t i = 0; i < in_dim; ++i) {
                if (act[l][i] <= 0.0) continue;  // ReLU gate
                double sum = 0.0;
                for (std::size_t o = 0; o < out_dim; ++o)
                    sum += weights[l][o * in_dim + i] * delta[l][o];
                delta[l - 1][i] = sum;
            }
        }
    }
    return total / static_cast<double>(n);
}

std::unique_ptr<MlpModel> train_mlp(const FeatureSource& X, const std::vector<std::uint8_t>& y,
                                    const MlpConfig& cfg) {
    cfg.validate();
    detail::check_training_inputs(X, y);

    const std::size_t n = X.rows(), d = X.cols();
    Standardizer standardizer = detail::fit_standardizer(X);
    const auto [w0, w1] = detail::class_weights_for(cfg.class_weight, y);

    Rng init_rng = Rng(cfg.seed).split(0);
    Rng order_rng = Rng(cfg.seed).split(1);
    MlpNet net = MlpNet::initialize(d, cfg.hidden_layer_sizes, init_rng);

    // Adam state.
    const std::size_t layers = net.weights.size();
    std::vector<std::vector<double>> mw(layers), vw(layers), mb(layers), vb(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        mw[l].assign(net.weights[l].size(), 0.0);
        vw[l].assign(net.weights[l].size(), 0.0);
        mb[l].assign(net.biases[l].size(), 0.0);
        vb[l].assign(net.biases[l].size(), 0.0);
    }

    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);

    std::vector<float> raw(d);
    std::vector<double> batch_x;
    std::vector<std::uint8_t> batch_y;
    std::vector<std::vector<double>> gw, gb;

    double best_loss = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;
    std::uint64_t step = 0;

    for (int epoch = 0; epoch < cfg.max_iter; ++epoch) {
        order_rng.shuffle(indices);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count = std::min<std::size_t>(cfg.batch_size, n - start);
            batch_x.resize(count * d);
            batch_y.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t idx = indices[start + i];
                X.read_row(idx, raw.data());
                standardizer.apply(raw.data(), batch_x.data() + i * d);
                batch_y[i] = y[idx];
            }

            const double loss = net.loss(batch_x, batch_y, w0, w1, &gw, &gb);
            if (!std::isfinite(loss))
                throw TrainingDivergedError("MLP loss became non-finite at epoch " +
                                                std::to_string(epoch),
                                            epoch);
            epoch_loss += loss;
            ++batches;

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto adam_update = [&](std::vector<double>& param, std::vector<double>& m,
                                   std::vector<double>& v, const std::vector<double>& g) {
                for (std::size_t i = 0; i < param.size(); ++i) {
                    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                    param[i] -= cfg.learning_rate * (m[i] / bc1) /
                                (std::sqrt(v[i] / bc2) + cfg.adam_eps);
                }
            };
            for (std::size_t l = 0; l < layers; ++l) {
                adam_update(net.weights[l], mw[l], vw[l], gw[l]);
                adam_update(net.biases[l], mb[l], vb[l], gb[l]);
            }
        }

        epoch_loss /= static_cast<double>(batches);
        if (epoch_loss < best_loss - cfg.early_stop_tol) {
            best_loss = epoch_loss;
            stale_epochs = 0;
        } else if (++stale_epochs >= cfg.patience) {
            break;
        }
    }

    auto model = std::make_unique<MlpModel>();
    model->config = cfg;
    model->standardizer = std::move(standardizer);
    model->input_dim = d;
    model->weights = std::move(net.weights);
    model->biases = std::move(net.biases);
    return model;
}

}  // namespace aquifer
