#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "aquifer/rng.hpp"
#include "train_util.hpp"

namespace aquifer {

namespace {

struct TreeBuilder {
    const std::vector<float>& data;  // rows x d, row-major
    const std::vector<std::uint8_t>& y;
    std::size_t d;
    const RfConfig& cfg;
    double w0, w1;
    std::size_t mtry;
    Rng rng;
    std::vector<TreeNode> nodes;

    float value(std::size_t row, std::size_t feature) const { return data[row * d + feature]; }

    std::int32_t build(std::vector<std::size_t>& samples, std::size_t begin, std::size_t end,
                       int depth) {
        const std::size_t n = end - begin;
        double wpos = 0.0, wneg = 0.0;
        for (std::size_t i = begin; i < end; ++i) (y[samples[i]] ? wpos : wneg) += y[samples[i]] ? w1 : w0;

        const auto make_leaf = [&]() {
            TreeNode leaf;
            leaf.feature = -1;
            leaf.leaf_prob = (wpos + wneg) > 0 ? wpos / (wpos + wneg) : 0.0;
            nodes.push_back(leaf);
            return static_cast<std::int32_t>(nodes.size() - 1);
        };

        if (depth >= cfg.max_depth || n < static_cast<std::size_t>(cfg.min_samples_split) ||
            wpos == 0.0 || wneg == 0.0) {
            return make_leaf();
        }

        // Candidate features: mtry sampled without replacement.
        std::vector<std::size_t> feats(d);
        std::iota(feats.begin(), feats.end(), 0);
        for (std::size_t i = 0; i < mtry; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(d - i));
            std::swap(feats[i], feats[j]);
        }

        const double total = wpos + wneg;
        const auto gini_sum = [](double a, double b) {
            const double t = a + b;
            return t > 0 ? t * (1.0 - (a * a + b * b) / (t * t)) : 0.0;
        };

        double best_score = gini_sum(wneg, wpos);  // must strictly improve
        std::int32_t best_feature = -1;
        float best_threshold = 0.0f;

        std::vector<std::pair<float, std::uint8_t>> order(n);
        for (std::size_t fi = 0; fi < mtry; ++fi) {
            const std::size_t f = feats[fi];
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t row = samples[begin + i];
                order[i] = {value(row, f), y[row]};
            }
            std::sort(order.begin(), order.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            double left_pos = 0.0, left_neg = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                (order[i].second ? left_pos : left_neg) += order[i].second ? w1 : w0;
                if (!(order[i].first < order[i + 1].first)) continue;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < static_cast<std::size_t>(cfg.min_samples_leaf) ||
                    nr < static_cast<std::size_t>(cfg.min_samples_leaf))
                    continue;
                const double score = gini_sum(left_neg, left_pos) +
                                     gini_sum(wneg - left_neg, wpos - left_pos);
                if (score < best_score - 1e-12 * total) {
                    best_score = score;
                    best_feature = static_cast<std::int32_t>(f);
                    best_threshold =
                        order[i].first + (order[i + 1].first - order[i].first) * 0.5f;
                    // guard against midpoint rounding onto the upper value
                    if (!(order[i].first <= best_threshold && best_threshold < order[i + 1].first))
                        best_threshold = order[i].first;
                }
            }
        }

        if (best_feature < 0) return make_leaf();

        const auto mid = std::partition(
            samples.begin() + static_cast<std::ptrdiff_t>(begin),
            samples.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::size_t row) { return value(row, best_feature) <= best_threshold; });
        const std::size_t split = static_cast<std::size_t>(mid - samples.begin());

        TreeNode node;
        node.feature = best_feature;
        node.threshold = best_threshold;
        nodes.push_back(node);
        const std::int32_t self = static_cast<std::int32_t>(nodes.size() - 1);
        const std::int32_t left = build(samples, begin, split, depth + 1);
        const std::int32_t right = build(samples, split, end, depth + 1);
        nodes[self].left = left;
        nodes[self].right = right;
        return self;
    }
};

std::vector<TreeNode> build_tree(const std::vector<float>& data, const std::vector<std::uint8_t>& y,
                                 std::size_t d, const RfConfig& cfg, double w0, double w1,
                                 std::size_t mtry, Rng rng) {
    const std::size_t n = y.size();
    std::vector<std::size_t> samples(n);
    if (cfg.bootstrap) {
        for (std::size_t i = 0; i < n; ++i) samples[i] = static_cast<std::size_t>(rng.next_below(n));
    } else {
        std::iota(samples.begin(), samples.end(), 0);
    }
    TreeBuilder builder{data, y, d, cfg, w0, w1, mtry, rng, {}};
    // Root first: build() appends children after their parent, root at index 0
    // only when the recursion starts with an empty node list and the root split
    // node is pushed before its subtrees.
    builder.build(samples, 0, n, 0);
    return std::move(builder.nodes);
}

}  // namespace

std::unique_ptr<ForestModel> train_rf(const FeatureSource& X, const std::vector<std::uint8_t>& y,
                                      const RfConfig& cfg, int threads) {
    cfg.validate();
    detail::check_training_inputs(X, y);

    const std::size_t n = X.rows(), d = X.cols();
    // Trees need columnar access; materialize once.
    std::vector<float> data(n * d);
    X.read_rows(0, n, data.data());
    for (float v : data)
        if (!std::isfinite(v)) throw ValidationError("non-finite feature value in training data");

    const auto [w0, w1] = detail::class_weights_for(cfg.class_weight, y);
    const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));

    auto model = std::make_unique<ForestModel>();
    model->config = cfg;
    model->n_features = d;
    model->trees.resize(static_cast<std::size_t>(cfg.n_estimators));

    const Rng root(cfg.seed);
    const unsigned hw = std::thread::hardware_concurrency();
    const int n_threads = threads > 0 ? threads : static_cast<int>(hw ? hw : 1);

    // Per-tree RNG streams are derived from (seed, tree index), so the result
    // is independent of the thread count.
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= model->trees.size()) return;
            model->trees[t] = build_tree(data, y, d, cfg, w0, w1, mtry, root.split(t + 1));
        }
    };
    if (n_threads <= 1 || cfg.n_estimators == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return model;
}

}  // namespace aquifer
