#pragma once

#include <cstdint>
#include <vector>

#include "aquifer/rng.hpp"

namespace aquifer {

// Fully-connected ReLU network with a single sigmoid output unit, exposed so
// the analytic backward pass can be checked against finite differences of
// loss() on the same parameters.
struct MlpNet {
    std::vector<std::size_t> sizes;  // input, hidden..., 1
    std::vector<std::vector<double>> weights;  // per layer, row-major (out x in)
    std::vector<std::vector<double>> biases;

    static MlpNet initialize(std::size_t input_dim, const std::vector<int>& hidden, Rng& rng);

    double forward(const double* x) const;

    // Mean class-weighted binary cross-entropy over the batch (X row-major,
    // n x input). When grads_w/grads_b are non-null they receive d(loss)/d(param).
    double loss(const std::vector<double>& X, const std::vector<std::uint8_t>& y,
                double w0, double w1,
                std::vector<std::vector<double>>* grads_w = nullptr,
                std::vector<std::vector<double>>* grads_b = nullptr) const;
};

}  // namespace aquifer
