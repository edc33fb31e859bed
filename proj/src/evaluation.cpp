#include "aquifer/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "aquifer/rng.hpp"

namespace aquifer {

Confusion confusion_counts(const std::vector<std::uint8_t>& predicted,
                           const std::vector<std::uint8_t>& truth) {
    if (predicted.size() != truth.size())
        throw ShapeError("prediction and truth sizes differ: " + std::to_string(predicted.size()) +
                         " vs " + std::to_string(truth.size()));
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] != 0, t = truth[i] != 0;
        if (p && t) ++c.tp;
        else if (p && !t) ++c.fp;
        else if (!p && t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

MetricsReport metrics_from_confusion(const Confusion& c) {
    MetricsReport r;
    const auto safe_div = [&r](std::uint64_t num, std::uint64_t den) {
        if (den == 0) {
            r.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.pixel_jaccard = safe_div(c.tp, c.tp + c.fn + c.fp);
    r.pos_accuracy = safe_div(c.tp, c.tp + c.fn);
    r.neg_accuracy = safe_div(c.tn, c.fp + c.tn);
    r.balanced_accuracy = (r.pos_accuracy + r.neg_accuracy) / 2.0;
    return r;
}

namespace {

void check_both_classes(const std::vector<std::uint8_t>& truth) {
    bool has0 = false, has1 = false;
    for (std::uint8_t t : truth) (t ? has1 : has0) = true;
    if (!has0 || !has1) throw DegenerateLabelsError("truth labels contain a single class");
}

}  // namespace

std::vector<std::uint8_t> apply_threshold(const std::vector<double>& probs, double threshold) {
    std::vector<std::uint8_t> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1 : 0;
    return out;
}

RocCurve roc_curve(const std::vector<double>& probs, const std::vector<std::uint8_t>& truth) {
    if (probs.size() != truth.size()) throw ShapeError("probs and truth sizes differ");
    check_both_classes(truth);

    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

    std::uint64_t pos = 0, neg = 0;
    for (std::uint8_t t : truth) (t ? pos : neg)++;

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = probs[order[i]];
        // consume the whole tie group at threshold t
        while (i < order.size() && probs[order[i]] == t) {
            (truth[order[i]] ? tp : fp)++;
            ++i;
        }
        curve.points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
    }
    if (curve.points.back().fpr != 1.0 || curve.points.back().tpr != 1.0)
        curve.points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
    return curve;
}

double auc_trapezoid(const RocCurve& curve) {
    double auc = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return auc;
}

std::pair<double, double> optimal_threshold(const std::vector<double>& probs,
                                            const std::vector<std::uint8_t>& truth) {
    if (probs.size() != truth.size()) throw ShapeError("probs and truth sizes differ");
    check_both_classes(truth);

    std::vector<double> unique(probs);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

    std::vector<double> candidates;
    candidates.push_back(0.0);
    for (std::size_t i = 0; i + 1 < unique.size(); ++i)
        candidates.push_back((unique[i] + unique[i + 1]) / 2.0);
    candidates.push_back(1.0);
    std::sort(candidates.begin(), candidates.end());

    double best_t = candidates.front(), best_pj = -1.0;
    for (double t : candidates) {
        const MetricsReport m = metrics_from_confusion(confusion_counts(apply_threshold(probs, t), truth));
        if (m.pixel_jaccard > best_pj) {  // strict: ties keep the smaller threshold
            best_pj = m.pixel_jaccard;
            best_t = t;
        }
    }
    return {best_t, best_pj};
}

std::vector<int> stratified_folds(const std::vector<std::uint8_t>& y, int folds,
                                  std::uint64_t seed) {
    if (folds < 2) throw ConfigError("folds must be >= 2");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i] ? 1 : 0].push_back(i);
    for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < static_cast<std::size_t>(folds))
            throw ConfigError("class " + std::to_string(c) + " has fewer samples than folds");
    }

    std::vector<int> assignment(y.size(), -1);
    for (int c = 0; c < 2; ++c) {
        Rng crng = Rng(seed).split(static_cast<std::uint64_t>(c) + 1);
        crng.shuffle(by_class[c]);
        for (std::size_t i = 0; i < by_class[c].size(); ++i)
            assignment[by_class[c][i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    }
    return assignment;
}

CvResult kfold_cv(const FeatureMatrix& X, const std::vector<std::uint8_t>& y, int folds,
                  const TrainConfig& trainer, std::uint64_t seed, int threads) {
    if (X.rows != y.size()) throw ShapeError("label count does not match feature rows");
    const std::vector<int> assignment = stratified_folds(y, folds, seed);

    CvResult result;
    for (int fold = 0; fold < folds; ++fold) {
        FeatureMatrix train_x, test_x;
        train_x.cols = test_x.cols = X.cols;
        train_x.col_meaning = test_x.col_meaning = X.col_meaning;
        std::vector<std::uint8_t> train_y, test_y;
        for (std::size_t i = 0; i < y.size(); ++i) {
            auto& dst = (assignment[i] == fold) ? test_x : train_x;
            auto& dst_y = (assignment[i] == fold) ? test_y : train_y;
            dst.data.insert(dst.data.end(), X.row(i), X.row(i) + X.cols);
            dst.rows++;
            dst_y.push_back(y[i]);
        }

        InMemoryFeatureSource train_src(train_x);
        const auto model = train(train_src, train_y, trainer, threads);
        const std::vector<double> probs = model->predict_proba(test_x);

        const auto [thresh, pj] = optimal_threshold(probs, test_y);
        const RocCurve curve = roc_curve(probs, test_y);
        MetricsReport m =
            metrics_from_confusion(confusion_counts(apply_threshold(probs, thresh), test_y));
        m.auc = auc_trapezoid(curve);
        m.optimal_threshold = thresh;
        result.folds.push_back(m);
    }

    MetricsReport& mean = result.mean;
    for (const MetricsReport& m : result.folds) {
        mean.pixel_jaccard += m.pixel_jaccard;
        mean.pos_accuracy += m.pos_accuracy;
        mean.neg_accuracy += m.neg_accuracy;
        mean.balanced_accuracy += m.balanced_accuracy;
        mean.auc += m.auc;
        mean.optimal_threshold += m.optimal_threshold;
        mean.degenerate = mean.degenerate || m.degenerate;
    }
    const double k = static_cast<double>(folds);
    mean.pixel_jaccard /= k;
    mean.pos_accuracy /= k;
    mean.neg_accuracy /= k;
    mean.balanced_accuracy /= k;
    mean.auc /= k;
    mean.optimal_threshold /= k;
    return result;
}

namespace {

void mask_shape_check(const Mask& a, const Mask& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("mask shapes differ");
}

}  // namespace

RgbRaster render_confusion_mask(const Mask& pred, const Mask& truth) {
    mask_shape_check(pred, truth);
    RgbRaster out;
    out.width = pred.width;
    out.height = pred.height;
    out.rgb.assign(static_cast<std::size_t>(pred.width) * pred.height * 3, 0);
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] != 0, t = truth.values[i] != 0;
        std::uint8_t* px = out.rgb.data() + i * 3;
        if (p && t) px[0] = 255;        // TP red
        else if (p && !t) px[1] = 255;  // FP green
        else if (!p && t) px[2] = 255;  // FN blue
    }
    return out;
}

RgbRaster render_stage2_mask(const Mask& stage2, Stage2RenderMode mode) {
    RgbRaster out;
    out.width = stage2.width;
    out.height = stage2.height;
    out.rgb.assign(static_cast<std::size_t>(stage2.width) * stage2.height * 3, 0);
    for (std::size_t i = 0; i < stage2.values.size(); ++i) {
        std::uint8_t* px = out.rgb.data() + i * 3;
        switch (stage2.values[i]) {
            case 0:
                break;  // non-building, black
            case 128:   // residential: gray (truth) / red (prediction)
                if (mode == Stage2RenderMode::Truth) px[0] = px[1] = px[2] = 128;
                else px[0] = 255;
                break;
            case 255:  // non-residential: white (truth) / yellow (prediction)
                if (mode == Stage2RenderMode::Truth) px[0] = px[1] = px[2] = 255;
                else px[0] = px[1] = 255;
                break;
            default:
                throw ValidationError("stage-2 mask value " + std::to_string(stage2.values[i]) +
                                      " outside palette {0,128,255}");
        }
    }
    return out;
}

void save_ppm(const RgbRaster& raster, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    const std::string header =
        "P6\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(raster.rgb.data()),
              static_cast<std::streamsize>(raster.rgb.size()));
    if (!out) throw IoError("write failed: " + path);
}

void save_roc_csv(const RocCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "threshold,fpr,tpr\n";
    out.precision(17);
    for (const RocPoint& p : curve.points) out << p.threshold << "," << p.fpr << "," << p.tpr << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace aquifer
