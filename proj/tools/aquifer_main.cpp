#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aquifer/estimation.hpp"
#include "aquifer/evaluation.hpp"
#include "aquifer/features.hpp"
#include "aquifer/learners.hpp"
#include "aquifer/rasterize.hpp"
#include "aquifer/scenegen.hpp"

namespace {

using aquifer::ClassLabel;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

// Manifest carries everything needed to replay the run; the wall-clock
// duration goes to stderr so the manifest stays byte-stable across reruns.
struct ManifestWriter {
    ordered_json j;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    ManifestWriter(const std::string& subcommand) {
        j["tool"] = "aquifer";
        j["version"] = kVersion;
        j["subcommand"] = subcommand;
    }

    void finish(const std::string& primary_output) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream out(primary_output + ".manifest.json", std::ios::binary | std::ios::trunc);
        out << j.dump(2) << "\n";
        std::cerr << "wall_clock_seconds: " << secs << "\n";
    }
};

int resolve_threads(int threads_flag) {
    if (threads_flag > 0) return threads_flag;
    if (const char* env = std::getenv("AQUIFER_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0;  // library picks hardware concurrency
}

std::optional<std::set<ClassLabel>> parse_class_filter(const std::string& classes) {
    if (classes == "all") return std::nullopt;
    if (classes == "building")
        return std::set<ClassLabel>{ClassLabel::Residential, ClassLabel::NonResidential,
                                    ClassLabel::UnclassifiedBuilding};
    return std::set<ClassLabel>{aquifer::class_label_from_name(classes)};
}

struct FeatureFlags {
    int k = 4;
    bool hog = true;
    int hog_cell = 8;
    int hog_bins = 9;
};

aquifer::FeatureMatrix build_features(const aquifer::MultibandImage& image,
                                      const FeatureFlags& ff) {
    aquifer::FrameConfig frame{ff.k};
    std::optional<aquifer::HogConfig> hog;
    if (ff.hog) {
        aquifer::HogConfig h;
        h.cell_size = ff.hog_cell;
        h.bins = ff.hog_bins;
        hog = h;
    }
    return aquifer::assemble_features(image, frame, hog);
}

void add_feature_flags(CLI::App* cmd, FeatureFlags& ff, bool hog_default) {
    ff.hog = hog_default;
    cmd->add_option("--k", ff.k, "Pixel frame half-width");
    cmd->add_flag("--hog,!--no-hog", ff.hog, "Append HOG descriptor columns");
    cmd->add_option("--hog-cell", ff.hog_cell, "HOG cell size in pixels");
    cmd->add_option("--hog-bins", ff.hog_bins, "HOG orientation bins");
}

struct TrainFlags {
    std::string model = "mlp";
    std::string stage = "building";
    bool preset = false;
    std::uint64_t seed = 0;
    // overrides
    std::string loss = "logistic";
    double alpha = 1e-3;
    double eta0 = 0.01;
    int epochs = 5;
    int trees = 500;
    int depth = 50;
    int min_leaf = 2;
    int min_split = 2;
    std::vector<int> hidden = {75, 25, 100, 20, 75, 25};
    int max_iter = 1000;
    int batch_size = 256;
    std::string class_weight = "balanced";
    double threshold = -1.0;  // <0: model default
};

aquifer::TrainConfig make_train_config(const TrainFlags& tf) {
    const aquifer::ClassWeight cw = tf.class_weight == "none" ? aquifer::ClassWeight::None
                                                              : aquifer::ClassWeight::Balanced;
    if (tf.model == "sgd") {
        aquifer::SgdConfig c;  // defaults are the published preset
        if (!tf.preset) {
            c.loss = tf.loss == "modified_huber" ? aquifer::SgdLoss::ModifiedHuber
                                                 : aquifer::SgdLoss::Logistic;
            c.l2_alpha = tf.alpha;
            c.eta0 = tf.eta0;
            c.epochs = tf.epochs;
            c.class_weight = cw;
            if (tf.threshold >= 0) c.default_threshold = tf.threshold;
        }
        c.seed = tf.seed;
        return c;
    }
    if (tf.model == "rf") {
        aquifer::RfConfig c;
        if (!tf.preset) {
            c.n_estimators = tf.trees;
            c.max_depth = tf.depth;
            c.min_samples_leaf = tf.min_leaf;
            c.min_samples_split = tf.min_split;
            c.class_weight = cw;
            if (tf.threshold >= 0) c.default_threshold = tf.threshold;
        }
        c.seed = tf.seed;
        return c;
    }
    if (tf.model == "mlp") {
        aquifer::MlpConfig c;
        if (!tf.preset) {
            c.hidden_layer_sizes = tf.hidden;
            c.max_iter = tf.max_iter;
            c.batch_size = tf.batch_size;
            c.class_weight = cw;
            if (tf.threshold >= 0) c.default_threshold = tf.threshold;
        }
        c.seed = tf.seed;
        return c;
    }
    throw CLI::ValidationError("--model must be one of sgd|rf|mlp");
}

// stage=building: every pixel, label = mask>0.
// stage=restype: building pixels only, label = residential (128).
void stage_rows(const std::string& stage, const aquifer::Mask& mask,
                const aquifer::FeatureMatrix& all_features, aquifer::FeatureMatrix& X,
                std::vector<std::uint8_t>& y, std::vector<std::size_t>* row_index = nullptr) {
    if (all_features.rows != mask.values.size())
        throw aquifer::ShapeError("mask and image dimensions differ");
    if (stage == "building") {
        X = all_features;
        y.resize(mask.values.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = mask.values[i] ? 1 : 0;
        if (row_index) {
            row_index->resize(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) (*row_index)[i] = i;
        }
        return;
    }
    X.rows = 0;
    X.cols = all_features.cols;
    X.col_meaning = all_features.col_meaning;
    X.data.clear();
    y.clear();
    if (row_index) row_index->clear();
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
        if (mask.values[i] == 0) continue;
        if (mask.values[i] != 128 && mask.values[i] != 255)
            throw aquifer::ValidationError("restype stage needs a stage-2 mask (0/128/255)");
        X.data.insert(X.data.end(), all_features.row(i), all_features.row(i) + all_features.cols);
        X.rows++;
        y.push_back(mask.values[i] == 128 ? 1 : 0);
        if (row_index) row_index->push_back(i);
    }
    if (y.empty()) throw aquifer::ValidationError("mask contains no building pixels");
}

ordered_json metrics_json(const aquifer::MetricsReport& m) {
    ordered_json j;
    j["pixel_jaccard"] = m.pixel_jaccard;
    j["pos_accuracy"] = m.pos_accuracy;
    j["neg_accuracy"] = m.neg_accuracy;
    j["balanced_accuracy"] = m.balanced_accuracy;
    j["auc"] = m.auc;
    j["optimal_threshold"] = m.optimal_threshold;
    j["degenerate"] = m.degenerate;
    return j;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw aquifer::IoError("cannot open for writing: " + path);
    out << body;
}

int run(int argc, char** argv) {
    CLI::App app{"aquifer: building detection, classification, and water-consumption estimation"};
    app.require_subcommand(1);

    int threads_flag = 0;
    app.add_option("--threads", threads_flag, "Internal parallelism cap (env AQUIFER_THREADS)");

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic scene");
    std::string synth_config, synth_image, synth_ann;
    std::int64_t synth_seed = -1;
    synth->add_option("--config", synth_config, "Scene config JSON")->required();
    synth->add_option("--out-image", synth_image, "Output MBR image")->required();
    synth->add_option("--out-annotations", synth_ann, "Output annotation JSON")->required();
    synth->add_option("--seed", synth_seed, "Override config seed");

    // ---- rasterize ----
    auto* rasterize = app.add_subcommand("rasterize", "Polygon annotations to a raster mask");
    std::string ras_image, ras_ann, ras_out, ras_classes = "building", ras_palette = "binary";
    rasterize->add_option("--image", ras_image, "Reference MBR image (for dimensions)")->required();
    rasterize->add_option("--annotations", ras_ann, "Annotation JSON")->required();
    rasterize->add_option("--out", ras_out, "Output PGM mask")->required();
    rasterize->add_option("--classes", ras_classes,
                          "all|building|residential|non_residential|unclassified_building");
    rasterize->add_option("--palette", ras_palette, "binary (0/255) or stage2 (0/128/255)");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train a classifier");
    std::string train_image, train_mask, train_out;
    TrainFlags tf;
    FeatureFlags train_ff;
    train_cmd->add_option("--image", train_image, "Training MBR image")->required();
    train_cmd->add_option("--mask", train_mask, "Ground-truth PGM mask")->required();
    train_cmd->add_option("--out", train_out, "Output model file")->required();
    train_cmd->add_option("--model", tf.model, "sgd|rf|mlp")->required();
    train_cmd->add_option("--stage", tf.stage, "building|restype");
    train_cmd->add_flag("--preset", tf.preset, "Use the published optimal hyperparameters");
    train_cmd->add_option("--seed", tf.seed, "Training seed");
    train_cmd->add_option("--loss", tf.loss, "SGD loss: logistic|modified_huber");
    train_cmd->add_option("--alpha", tf.alpha, "SGD L2 strength");
    train_cmd->add_option("--eta0", tf.eta0, "SGD initial learning rate");
    train_cmd->add_option("--epochs", tf.epochs, "SGD epochs");
    train_cmd->add_option("--trees", tf.trees, "RF tree count");
    train_cmd->add_option("--depth", tf.depth, "RF max depth");
    train_cmd->add_option("--min-leaf", tf.min_leaf, "RF min samples per leaf");
    train_cmd->add_option("--min-split", tf.min_split, "RF min samples to split");
    train_cmd->add_option("--hidden", tf.hidden, "MLP hidden layer sizes")->delimiter(',');
    train_cmd->add_option("--max-iter", tf.max_iter, "MLP epoch cap");
    train_cmd->add_option("--batch-size", tf.batch_size, "MLP mini-batch size");
    train_cmd->add_option("--class-weight", tf.class_weight, "balanced|none");
    train_cmd->add_option("--threshold", tf.threshold, "Default decision threshold");
    add_feature_flags(train_cmd, train_ff, true);

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "Per-pixel probability mask from a model");
    std::string pred_model, pred_image, pred_out;
    FeatureFlags pred_ff;
    predict->add_option("--model", pred_model, "Model file")->required();
    predict->add_option("--image", pred_image, "Input MBR image")->required();
    predict->add_option("--out", pred_out, "Output probability MBR")->required();
    add_feature_flags(predict, pred_ff, true);

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand("evaluate", "Metrics, ROC, and rendered masks");
    std::string eval_probs, eval_truth, eval_metrics, eval_roc, eval_ppm;
    double eval_threshold = -1.0;
    bool eval_sweep = false;
    evaluate->add_option("--probs", eval_probs, "Probability MBR")->required();
    evaluate->add_option("--truth", eval_truth, "Ground-truth PGM mask")->required();
    evaluate->add_option("--out-metrics", eval_metrics, "Metrics JSON")->required();
    evaluate->add_option("--out-roc", eval_roc, "ROC CSV");
    evaluate->add_option("--out-confusion", eval_ppm, "Confusion-mask PPM");
    evaluate->add_option("--threshold", eval_threshold, "Fixed decision threshold");
    evaluate->add_flag("--sweep", eval_sweep, "Sweep the Jaccard-optimal threshold");

    // ---- cv ----
    auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
    std::string cv_image, cv_mask, cv_out;
    int cv_folds = 5;
    TrainFlags cv_tf;
    FeatureFlags cv_ff;
    cv->add_option("--image", cv_image, "MBR image")->required();
    cv->add_option("--mask", cv_mask, "Ground-truth PGM mask")->required();
    cv->add_option("--out", cv_out, "Output JSON")->required();
    cv->add_option("--model", cv_tf.model, "sgd|rf|mlp")->required();
    cv->add_option("--stage", cv_tf.stage, "building|restype");
    cv->add_option("--folds", cv_folds, "Fold count");
    cv->add_flag("--preset", cv_tf.preset, "Use the published optimal hyperparameters");
    cv->add_option("--seed", cv_tf.seed, "Seed for folds and training");
    cv->add_option("--loss", cv_tf.loss, "SGD loss");
    cv->add_option("--alpha", cv_tf.alpha, "SGD L2 strength");
    cv->add_option("--eta0", cv_tf.eta0, "SGD initial learning rate");
    cv->add_option("--epochs", cv_tf.epochs, "SGD epochs");
    cv->add_option("--trees", cv_tf.trees, "RF tree count");
    cv->add_option("--depth", cv_tf.depth, "RF max depth");
    cv->add_option("--min-leaf", cv_tf.min_leaf, "RF min samples per leaf");
    cv->add_option("--min-split", cv_tf.min_split, "RF min samples to split");
    cv->add_option("--hidden", cv_tf.hidden, "MLP hidden layer sizes")->delimiter(',');
    cv->add_option("--max-iter", cv_tf.max_iter, "MLP epoch cap");
    cv->add_option("--batch-size", cv_tf.batch_size, "MLP mini-batch size");
    cv->add_option("--class-weight", cv_tf.class_weight, "balanced|none");
    add_feature_flags(cv, cv_ff, true);

    // ---- estimate ----
    auto* estimate = app.add_subcommand("estimate", "Expected areas and daily water consumption");
    std::string est_pb, est_pr, est_out;
    double est_pixel_size = 1.24, est_wr = 40.0, est_wnr = 21.0, est_occ = 750.0;
    bool est_hard = false, est_benchmark = false;
    double est_tb = 0.5, est_tr = 0.5;
    estimate->add_option("--p-building", est_pb, "Stage-1 probability MBR")->required();
    estimate->add_option("--p-res", est_pr, "Stage-2 probability MBR (P{res|building})")->required();
    estimate->add_option("--out", est_out, "Report JSON")->required();
    estimate->add_option("--pixel-size", est_pixel_size, "Pixel side in meters");
    estimate->add_option("--w-r", est_wr, "Residential gal/person/day");
    estimate->add_option("--w-nr", est_wnr, "Non-residential gal/person/day");
    estimate->add_option("--occupancy", est_occ, "ft^2 per person");
    estimate->add_flag("--hard", est_hard, "Threshold masks before the expectation");
    estimate->add_option("--threshold-building", est_tb, "Hard threshold for P{building}");
    estimate->add_option("--threshold-res", est_tr, "Hard threshold for P{res|building}");
    estimate->add_flag("--benchmark", est_benchmark, "Append the Phoenix/Portland comparison");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const int threads = resolve_threads(threads_flag);

    if (*synth) {
        ManifestWriter manifest("synth");
        aquifer::SceneConfig cfg = aquifer::scene_config_from_json_file(synth_config);
        if (synth_seed >= 0) cfg.seed = static_cast<std::uint64_t>(synth_seed);
        const aquifer::Scene scene = aquifer::generate_scene(cfg);
        aquifer::save_image(scene.image, synth_image);
        aquifer::save_annotations(scene.annotations, synth_ann);
        manifest.j["inputs"] = {{"config", synth_config}};
        manifest.j["seed"] = cfg.seed;
        manifest.j["outputs"] = {{"image", synth_image}, {"annotations", synth_ann}};
        manifest.finish(synth_image);
        return 0;
    }

    if (*rasterize) {
        ManifestWriter manifest("rasterize");
        const aquifer::MultibandImage image = aquifer::load_image(ras_image);
        const aquifer::AnnotationSet ann = aquifer::load_annotations(ras_ann);
        aquifer::Mask mask;
        if (ras_palette == "stage2") {
            mask.width = image.width;
            mask.height = image.height;
            mask.values.assign(image.pixel_count(), 0);
            for (ClassLabel label : {ClassLabel::NonResidential, ClassLabel::Residential}) {
                const aquifer::Mask m = aquifer::rasterize_annotations(
                    ann, image.width, image.height, std::set<ClassLabel>{label});
                const std::uint8_t code = label == ClassLabel::Residential ? 128 : 255;
                for (std::size_t i = 0; i < m.values.size(); ++i)
                    if (m.values[i]) mask.values[i] = code;
            }
        } else if (ras_palette == "binary") {
            mask = aquifer::rasterize_annotations(ann, image.width, image.height,
                                                  parse_class_filter(ras_classes));
        } else {
            throw CLI::ValidationError("--palette must be binary or stage2");
        }
        aquifer::save_mask(mask, ras_out);
        manifest.j["inputs"] = {{"image", ras_image}, {"annotations", ras_ann}};
        manifest.j["classes"] = ras_classes;
        manifest.j["palette"] = ras_palette;
        manifest.j["fill_rule"] = "even_odd";
        manifest.j["sample_point"] = "pixel_center";
        manifest.j["outputs"] = {{"mask", ras_out}};
        manifest.finish(ras_out);
        return 0;
    }

    if (*train_cmd) {
        if (tf.stage != "building" && tf.stage != "restype")
            throw CLI::ValidationError("--stage must be building or restype");
        // Stage 2 reuses the stage-1 features minus HOG.
        if (tf.stage == "restype" && train_ff.hog && train_cmd->count("--hog") > 0)
            throw CLI::ValidationError("--stage restype excludes HOG features");
        if (tf.stage == "restype") train_ff.hog = false;

        ManifestWriter manifest("train");
        const aquifer::MultibandImage image = aquifer::load_image(train_image);
        const aquifer::Mask mask = aquifer::load_mask(train_mask);
        if (mask.width != image.width || mask.height != image.height)
            throw aquifer::ShapeError("mask and image dimensions differ");
        const aquifer::FeatureMatrix all_features = build_features(image, train_ff);
        aquifer::FeatureMatrix X;
        std::vector<std::uint8_t> y;
        stage_rows(tf.stage, mask, all_features, X, y);

        const aquifer::TrainConfig cfg = make_train_config(tf);
        aquifer::InMemoryFeatureSource src(X);
        const auto model = aquifer::train(src, y, cfg, threads);
        aquifer::save_model(*model, train_out);

        manifest.j["inputs"] = {{"image", train_image}, {"mask", train_mask}};
        manifest.j["model"] = tf.model;
        manifest.j["stage"] = tf.stage;
        manifest.j["preset"] = tf.preset;
        manifest.j["seed"] = tf.seed;
        manifest.j["features"] = {{"k", train_ff.k},
                                  {"hog", train_ff.hog},
                                  {"hog_cell", train_ff.hog_cell},
                                  {"hog_bins", train_ff.hog_bins},
                                  {"cols", X.cols}};
        manifest.j["threads"] = threads;
        manifest.j["outputs"] = {{"model", train_out}};
        manifest.finish(train_out);
        return 0;
    }

    if (*predict) {
        ManifestWriter manifest("predict");
        const auto model = aquifer::load_model(pred_model);
        const aquifer::MultibandImage image = aquifer::load_image(pred_image);
        const aquifer::FeatureMatrix X = build_features(image, pred_ff);
        if (X.cols != model->feature_dim())
            throw aquifer::ConfigError("feature dimension mismatch: model expects " +
                                       std::to_string(model->feature_dim()) + ", provided " +
                                       std::to_string(X.cols));
        const std::vector<double> probs = model->predict_proba(X);
        aquifer::ProbabilityMask out;
        out.width = image.width;
        out.height = image.height;
        out.probs.assign(probs.begin(), probs.end());
        for (float& p : out.probs) p = std::min(1.0f, std::max(0.0f, p));
        aquifer::save_probability_mask(out, pred_out);

        manifest.j["inputs"] = {{"model", pred_model}, {"image", pred_image}};
        manifest.j["features"] = {{"k", pred_ff.k},
                                  {"hog", pred_ff.hog},
                                  {"hog_cell", pred_ff.hog_cell},
                                  {"hog_bins", pred_ff.hog_bins},
                                  {"cols", X.cols}};
        manifest.j["outputs"] = {{"probability_mask", pred_out}};
        manifest.finish(pred_out);
        return 0;
    }

    if (*evaluate) {
        if (eval_sweep == (eval_threshold >= 0))
            throw CLI::ValidationError("pass exactly one of --threshold or --sweep");
        ManifestWriter manifest("evaluate");
        const aquifer::ProbabilityMask pm = aquifer::load_probability_mask(eval_probs);
        const aquifer::Mask truth_mask = aquifer::load_mask(eval_truth);
        if (pm.width != truth_mask.width || pm.height != truth_mask.height)
            throw aquifer::ShapeError("probability mask and truth mask dimensions differ");

        std::vector<double> probs(pm.probs.begin(), pm.probs.end());
        std::vector<std::uint8_t> truth(truth_mask.values.size());
        for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = truth_mask.values[i] ? 1 : 0;

        double threshold = eval_threshold;
        if (eval_sweep) threshold = aquifer::optimal_threshold(probs, truth).first;
        const std::vector<std::uint8_t> pred = aquifer::apply_threshold(probs, threshold);
        aquifer::MetricsReport m =
            aquifer::metrics_from_confusion(aquifer::confusion_counts(pred, truth));
        const aquifer::RocCurve curve = aquifer::roc_curve(probs, truth);
        m.auc = aquifer::auc_trapezoid(curve);
        m.optimal_threshold = threshold;

        ordered_json j = metrics_json(m);
        j["mode"] = eval_sweep ? "sweep" : "value";
        write_text(eval_metrics, j.dump(2) + "\n");
        if (!eval_roc.empty()) aquifer::save_roc_csv(curve, eval_roc);
        if (!eval_ppm.empty()) {
            aquifer::Mask pred_mask;
            pred_mask.width = pm.width;
            pred_mask.height = pm.height;
            pred_mask.values.resize(pred.size());
            for (std::size_t i = 0; i < pred.size(); ++i) pred_mask.values[i] = pred[i] ? 255 : 0;
            aquifer::save_ppm(aquifer::render_confusion_mask(pred_mask, truth_mask), eval_ppm);
        }

        manifest.j["inputs"] = {{"probs", eval_probs}, {"truth", eval_truth}};
        manifest.j["mode"] = eval_sweep ? "sweep" : "value";
        manifest.j["threshold"] = threshold;
        manifest.j["outputs"] = {{"metrics", eval_metrics}, {"roc", eval_roc}, {"confusion", eval_ppm}};
        manifest.finish(eval_metrics);
        return 0;
    }

    if (*cv) {
        if (cv_folds < 2) throw CLI::ValidationError("--folds must be >= 2");
        if (cv_tf.stage != "building" && cv_tf.stage != "restype")
            throw CLI::ValidationError("--stage must be building or restype");
        if (cv_tf.stage == "restype" && cv_ff.hog && cv->count("--hog") > 0)
            throw CLI::ValidationError("--stage restype excludes HOG features");
        if (cv_tf.stage == "restype") cv_ff.hog = false;

        ManifestWriter manifest("cv");
        const aquifer::MultibandImage image = aquifer::load_image(cv_image);
        const aquifer::Mask mask = aquifer::load_mask(cv_mask);
        if (mask.width != image.width || mask.height != image.height)
            throw aquifer::ShapeError("mask and image dimensions differ");
        const aquifer::FeatureMatrix all_features = build_features(image, cv_ff);
        aquifer::FeatureMatrix X;
        std::vector<std::uint8_t> y;
        stage_rows(cv_tf.stage, mask, all_features, X, y);

        const aquifer::CvResult result =
            aquifer::kfold_cv(X, y, cv_folds, make_train_config(cv_tf), cv_tf.seed, threads);

        ordered_json j;
        j["folds"] = ordered_json::array();
        for (const auto& m : result.folds) j["folds"].push_back(metrics_json(m));
        j["mean"] = metrics_json(result.mean);
        write_text(cv_out, j.dump(2) + "\n");

        manifest.j["inputs"] = {{"image", cv_image}, {"mask", cv_mask}};
        manifest.j["model"] = cv_tf.model;
        manifest.j["stage"] = cv_tf.stage;
        manifest.j["folds"] = cv_folds;
        manifest.j["seed"] = cv_tf.seed;
        manifest.j["features"] = {{"k", cv_ff.k}, {"hog", cv_ff.hog}, {"cols", X.cols}};
        manifest.j["threads"] = threads;
        manifest.j["outputs"] = {{"report", cv_out}};
        manifest.finish(cv_out);
        return 0;
    }

    if (*estimate) {
        ManifestWriter manifest("estimate");
        aquifer::ProbabilityMask pb = aquifer::load_probability_mask(est_pb);
        aquifer::ProbabilityMask pr = aquifer::load_probability_mask(est_pr);
        if (est_hard) {
            for (float& p : pb.probs) p = p >= est_tb ? 1.0f : 0.0f;
            for (float& p : pr.probs) p = p >= est_tr ? 1.0f : 0.0f;
        }
        aquifer::PixelGeometry geom{est_pixel_size * est_pixel_size};
        aquifer::ConsumptionRates rates;
        rates.w_r_gal_per_person_day = est_wr;
        rates.w_nr_gal_per_person_day = est_wnr;
        rates.occupancy_ft2_per_person = est_occ;

        const auto [a_r, a_nr] = aquifer::expected_areas(pb, pr, geom);
        const aquifer::ConsumptionReport report = aquifer::water_consumption(a_r, a_nr, rates, geom);

        ordered_json j = ordered_json::parse(aquifer::consumption_report_json(report));
        if (est_benchmark) {
            const double image_area_km2 =
                static_cast<double>(pb.width) * pb.height * geom.pixel_area_m2 / 1e6;
            j["benchmark"] = ordered_json::parse(
                aquifer::benchmark_comparison_json(aquifer::benchmark_comparison(report, image_area_km2)));
        }
        write_text(est_out, j.dump(2) + "\n");

        manifest.j["inputs"] = {{"p_building", est_pb}, {"p_res", est_pr}};
        manifest.j["hard"] = est_hard;
        manifest.j["pixel_size_m"] = est_pixel_size;
        manifest.j["rates"] = {{"w_r", est_wr}, {"w_nr", est_wnr}, {"occupancy", est_occ}};
        manifest.j["outputs"] = {{"report", est_out}};
        manifest.finish(est_out);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const aquifer::TrainingDivergedError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 4;
    } catch (const aquifer::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const aquifer::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
