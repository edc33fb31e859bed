#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aquifer/learners.hpp"
#include "aquifer/raster.hpp"

namespace aquifer {

struct Confusion {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::uint64_t total() const { return tp + tn + fp + fn; }
};

struct MetricsReport {
    double pixel_jaccard = 0.0;
    double pos_accuracy = 0.0;
    double neg_accuracy = 0.0;
    double balanced_accuracy = 0.0;
    double auc = 0.0;
    double optimal_threshold = 0.0;
    // Set when a metric's denominator was empty and the value was pinned to 0.
    bool degenerate = false;
};

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // (0,0) ... (1,1), fpr/tpr non-decreasing
};

Confusion confusion_counts(const std::vector<std::uint8_t>& predicted,
                           const std::vector<std::uint8_t>& truth);

// P_J = tp/(tp+fn+fp); A_p = tp/(tp+fn); A_n = tn/(fp+tn); Abar = (A_p+A_n)/2.
// Empty denominators yield 0 with the degenerate flag set.
MetricsReport metrics_from_confusion(const Confusion& c);

// Thresholds sweep descending unique probabilities; predicted positive iff
// prob >= threshold.
RocCurve roc_curve(const std::vector<double>& probs, const std::vector<std::uint8_t>& truth);

double auc_trapezoid(const RocCurve& curve);

// Candidates: midpoints of consecutive sorted unique probabilities plus {0,1};
// ties broken toward the smallest threshold.
std::pair<double, double> optimal_threshold(const std::vector<double>& probs,
                                            const std::vector<std::uint8_t>& truth);

std::vector<std::uint8_t> apply_threshold(const std::vector<double>& probs, double threshold);

struct CvResult {
    std::vector<MetricsReport> folds;
    MetricsReport mean;
};

// Seeded stratified k-fold; per fold, trains on the remainder, sweeps the
// optimal threshold on the held-out fold and records metrics there.
CvResult kfold_cv(const FeatureMatrix& X, const std::vector<std::uint8_t>& y, int folds,
                  const TrainConfig& trainer, std::uint64_t seed, int threads = 0);

// Stratified fold assignment (fold id per row), exposed for testing.
std::vector<int> stratified_folds(const std::vector<std::uint8_t>& y, int folds,
                                  std::uint64_t seed);

struct RgbRaster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major
};

// TP red, FP green, FN blue, TN black.
RgbRaster render_confusion_mask(const Mask& pred, const Mask& truth);

enum class Stage2RenderMode { Truth, Prediction };

// Stage-2 palette 0/128/255: truth mode renders residential gray and
// non-residential white; prediction mode renders them red and yellow.
RgbRaster render_stage2_mask(const Mask& stage2, Stage2RenderMode mode);

// Binary PPM (P6).
void save_ppm(const RgbRaster& raster, const std::string& path);

void save_roc_csv(const RocCurve& curve, const std::string& path);

}  // namespace aquifer
