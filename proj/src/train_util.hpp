#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aquifer/learners.hpp"

namespace aquifer::detail {

inline void check_training_inputs(const FeatureSource& X, const std::vector<std::uint8_t>& y) {
    if (X.rows() != y.size()) throw ShapeError("label count does not match feature rows");
    if (X.rows() == 0 || X.cols() == 0) throw ValidationError("empty training data");
    std::size_t n1 = 0;
    for (std::uint8_t v : y) {
        if (v > 1) throw ValidationError("labels must be binary (0/1)");
        n1 += v;
    }
    if (n1 == 0 || n1 == y.size())
        throw DegenerateLabelsError("training labels contain a single class");
}

// Streaming per-column mean/std (one pass, Welford over row chunks). Rejects
// non-finite features.
inline Standardizer fit_standardizer(const FeatureSource& X) {
    const std::size_t d = X.cols(), n = X.rows();
    std::vector<double> mean(d, 0.0), m2(d, 0.0);
    const std::size_t chunk = std::max<std::size_t>(1, 262144 / d);
    std::vector<float> buf(chunk * d);
    std::size_t seen = 0;
    for (std::size_t first = 0; first < n; first += chunk) {
        const std::size_t count = std::min(chunk, n - first);
        X.read_rows(first, count, buf.data());
        for (std::size_t r = 0; r < count; ++r) {
            ++seen;
            const float* row = buf.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) {
                const double v = row[j];
                if (!std::isfinite(v)) throw ValidationError("non-finite feature value in training data");
                const double delta = v - mean[j];
                mean[j] += delta / static_cast<double>(seen);
                m2[j] += delta * (v - mean[j]);
            }
        }
    }
    Standardizer s;
    s.mean = std::move(mean);
    s.inv_std.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double var = m2[j] / static_cast<double>(n);
        s.inv_std[j] = (var > 1e-24) ? 1.0 / std::sqrt(var) : 1.0;
    }
    return s;
}

inline std::pair<double, double> class_weights_for(ClassWeight mode,
                                                   const std::vector<std::uint8_t>& y) {
    if (mode == ClassWeight::Balanced) return compute_balanced_weights(y);
    return {1.0, 1.0};
}

}  // namespace aquifer::detail
