// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 8 and 9 drive the installed CLI binary end to end.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "aquifer/estimation.hpp"
#include "aquifer/evaluation.hpp"
#include "aquifer/features.hpp"
#include "aquifer/learners.hpp"
#include "aquifer/mlp_net.hpp"
#include "aquifer/rasterize.hpp"
#include "aquifer/rng.hpp"
#include "aquifer/scenegen.hpp"

namespace fs = std::filesystem;
using namespace aquifer;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << idx << ": " << name;
    if (!ok && !detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++g_failures;
}

// ---------- criteria 1 and 2 ----------

void criterion_consumption() {
    const ConsumptionReport r = water_consumption(213858.0, 16988.0, ConsumptionRates{});
    // The published non-residential share is rounded to one significant digit
    // (exact arithmetic gives ~5120 gal/day), so it is checked against the
    // printed precision instead of the 1% band the other figures satisfy.
    const bool ok = std::abs(r.residential_share_gal - 0.123e6) <= 0.01 * 0.123e6 &&
                    std::abs(r.nonresidential_share_gal - 0.005e6) < 0.0005e6 &&
                    std::abs(r.water_gal_per_day - 0.128e6) <= 0.01 * 0.128e6;
    std::ostringstream d;
    d << "R=" << r.residential_share_gal << " NR=" << r.nonresidential_share_gal
      << " total=" << r.water_gal_per_day;
    report(1, "consumption arithmetic within 1%", ok, d.str());
}

void criterion_benchmark() {
    ConsumptionReport r;
    r.water_gal_per_day = 0.128e6;
    const BenchmarkComparison c = benchmark_comparison(r, 1.0);
    const bool ok = c.within_40pct_phoenix && !c.exact_match_portland && !c.within_40pct_portland;
    std::ostringstream d;
    d << "phoenix ratio " << c.ratio_phoenix << " portland ratio " << c.ratio_portland;
    report(2, "benchmark band flags (Phoenix in, Portland out)", ok, d.str());
}

// ---------- criterion 3 ----------

void criterion_feature_dims() {
    Rng rng(101);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        const int c = 1 + static_cast<int>(rng.next_below(8));
        const int k = static_cast<int>(rng.next_below(5));
        const int w = 2 * k + 2 + static_cast<int>(rng.next_below(4));
        const int h = 2 * k + 2 + static_cast<int>(rng.next_below(4));
        MultibandImage img;
        img.width = w;
        img.height = h;
        img.bands = c;
        img.data.resize(static_cast<std::size_t>(c) * w * h);
        for (float& v : img.data) v = static_cast<float>(rng.next_double());
        const FeatureMatrix m = expand_frame_features(img, FrameConfig{k});
        const std::size_t want = static_cast<std::size_t>(c) * (2 * k + 1) * (2 * k + 1);
        if (m.cols != want || m.rows != static_cast<std::size_t>(w) * h) {
            ok = false;
            detail = "c=" + std::to_string(c) + " k=" + std::to_string(k) + " got " +
                     std::to_string(m.cols);
        }
    }
    if (ok) {
        MultibandImage img;
        img.width = img.height = 10;
        img.bands = 8;
        img.data.assign(800, 0.0f);
        ok = expand_frame_features(img, FrameConfig{4}).cols == 648;
        if (!ok) detail = "c=8,k=4 != 648";
    }
    report(3, "feature dimension law c*(2k+1)^2, 648 at c=8,k=4", ok, detail);
}

// ---------- criterion 4 ----------

double mann_whitney(const std::vector<double>& probs, const std::vector<std::uint8_t>& truth) {
    double score = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth[i]) continue;
        for (std::size_t j = 0; j < truth.size(); ++j) {
            if (truth[j]) continue;
            ++pairs;
            if (probs[i] > probs[j]) score += 1.0;
            else if (probs[i] == probs[j]) score += 0.5;
        }
    }
    return score / static_cast<double>(pairs);
}

void criterion_auc() {
    bool ok = true;
    std::string detail;

    if (auc_trapezoid(roc_curve({0.9, 0.1}, {1, 0})) != 1.0) {
        ok = false;
        detail = "perfect curve != 1.0";
    }
    {
        const RocCurve diag = roc_curve({0.5, 0.5, 0.5}, {1, 0, 1});
        if (auc_trapezoid(diag) != 0.5) {
            ok = false;
            detail = "diagonal != 0.5";
        }
    }
    {
        RocCurve c;
        c.points = {{1, 0, 0}, {0.5, 0.5, 1}, {0, 1, 1}};
        if (auc_trapezoid(c) != 0.75) {
            ok = false;
            detail = "explicit 0.75 curve";
        }
    }

    Rng rng(102);
    int done = 0;
    while (done < 200 && ok) {
        const std::size_t n = 2 + rng.next_below(48);
        std::vector<double> probs(n);
        std::vector<std::uint8_t> truth(n);
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            probs[i] = static_cast<double>(rng.next_below(12)) / 11.0;
            truth[i] = static_cast<std::uint8_t>(rng.next_below(2));
            (truth[i] ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;
        ++done;
        const double auc = auc_trapezoid(roc_curve(probs, truth));
        const double mw = mann_whitney(probs, truth);
        if (std::abs(auc - mw) > 1e-12) {
            ok = false;
            detail = "auc " + std::to_string(auc) + " vs MW " + std::to_string(mw);
        }
    }
    report(4, "trapezoidal AUC equals Mann-Whitney within 1e-12 (200 instances)", ok, detail);
}

// ---------- criterion 5 ----------

void criterion_threshold_sweep() {
    Rng rng(103);
    bool ok = true;
    std::string detail;
    int done = 0;
    while (done < 200 && ok) {
        const std::size_t n = 3 + rng.next_below(47);
        std::vector<double> probs(n);
        std::vector<std::uint8_t> truth(n);
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            probs[i] = rng.next_double();
            truth[i] = static_cast<std::uint8_t>(rng.next_below(2));
            (truth[i] ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;
        ++done;
        const double best = optimal_threshold(probs, truth).second;
        for (int g = 0; g <= 1000; ++g) {
            const double t = static_cast<double>(g) / 1000.0;
            const double pj =
                metrics_from_confusion(confusion_counts(apply_threshold(probs, t), truth))
                    .pixel_jaccard;
            if (best < pj) {
                ok = false;
                detail = "grid t=" + std::to_string(t) + " beats sweep";
                break;
            }
        }
    }
    report(5, "swept threshold dominates the 1001-point grid (200 instances)", ok, detail);
}

// ---------- criterion 6 ----------

bool oracle_in_ring(double px, double py, const std::vector<std::pair<double, double>>& ring) {
    int crossings = 0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        double ax = ring[i].first, ay = ring[i].second;
        double bx = ring[(i + 1) % n].first, by = ring[(i + 1) % n].second;
        if (ay > by) {
            std::swap(ax, bx);
            std::swap(ay, by);
        }
        if (!(ay <= py && py < by)) continue;
        const double cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
        if (by > ay && cross > 0) ++crossings;
    }
    return crossings % 2 == 1;
}

void criterion_rasterize_oracle() {
    Rng rng(104);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const int w = 4 + static_cast<int>(rng.next_below(14));
        const int h = 4 + static_cast<int>(rng.next_below(14));
        AnnotationSet ann;
        const int n_polys = 1 + static_cast<int>(rng.next_below(3));
        for (int p = 0; p < n_polys; ++p) {
            const int verts = 3 + static_cast<int>(rng.next_below(6));
            const double cx = rng.next_uniform(0, w), cy = rng.next_uniform(0, h);
            Polygon poly;
            for (int i = 0; i < verts; ++i) {
                const double angle = 2.0 * M_PI * (i + rng.next_uniform(0.0, 0.6)) / verts;
                const double r = rng.next_uniform(0.5, std::min(w, h) / 3.0);
                poly.exterior.emplace_back(cx + r * std::cos(angle), cy + r * std::sin(angle));
            }
            ann.polygons.push_back(poly);
        }
        const Mask actual = rasterize_annotations(ann, w, h);
        for (int j = 0; j < h && ok; ++j)
            for (int i = 0; i < w && ok; ++i) {
                bool inside = false;
                for (const Polygon& p : ann.polygons) {
                    bool in = oracle_in_ring(i + 0.5, j + 0.5, p.exterior);
                    for (const auto& hole : p.holes)
                        if (oracle_in_ring(i + 0.5, j + 0.5, hole)) in = !in;
                    inside = inside || in;
                }
                if ((actual.at(i, j) != 0) != inside) {
                    ok = false;
                    detail = "trial " + std::to_string(trial) + " pixel " + std::to_string(i) +
                             "," + std::to_string(j);
                }
            }
    }
    report(6, "rasterization equals the pixel-center oracle (100 scenes)", ok, detail);
}

// ---------- criterion 7 ----------

void criterion_mlp_gradients() {
    Rng rng(105);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 20 && ok; ++trial) {
        const std::size_t d = 2 + rng.next_below(4);
        std::vector<int> hidden;
        const int layers = 1 + static_cast<int>(rng.next_below(2));
        for (int l = 0; l < layers; ++l) hidden.push_back(2 + static_cast<int>(rng.next_below(5)));

        const std::size_t n = 8;
        std::vector<double> X(n * d);
        for (double& v : X) v = rng.next_gaussian();
        std::vector<std::uint8_t> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<std::uint8_t>(i % 2);

        Rng init = rng.split(trial + 1);
        MlpNet net = MlpNet::initialize(d, hidden, init);
        // Jitter the zero-initialized biases: finite differences are only
        // valid away from the ReLU kinks, and dead units would sit exactly
        // on one.
        for (auto& layer : net.biases)
            for (double& b : layer) b += init.next_uniform(0.05, 0.3);

        std::vector<std::vector<double>> gw, gb;
        net.loss(X, y, 1.2, 0.8, &gw, &gb);
        const double h = 1e-5;
        auto check = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double up = net.loss(X, y, 1.2, 0.8);
            param = saved - h;
            const double down = net.loss(X, y, 1.2, 0.8);
            param = saved;
            const double fd = (up - down) / (2 * h);
            const double rel =
                std::abs(fd - analytic) / std::max({1e-8, std::abs(fd), std::abs(analytic)});
            if (rel >= 1e-4) {
                ok = false;
                detail = "trial " + std::to_string(trial) + " rel " + std::to_string(rel);
            }
        };
        for (std::size_t l = 0; l < net.weights.size() && ok; ++l) {
            for (std::size_t i = 0; i < net.weights[l].size() && ok; ++i)
                check(net.weights[l][i], gw[l][i]);
            for (std::size_t i = 0; i < net.biases[l].size() && ok; ++i)
                check(net.biases[l][i], gb[l][i]);
        }
    }
    report(7, "MLP gradients match finite differences (20 networks, h=1e-5)", ok, detail);
}

// ---------- criteria 8 and 9 ----------

int run_cli(const fs::path& dir, const std::string& args) {
    const std::string cmd =
        "cd \"" + dir.string() + "\" && \"" + AQUIFER_CLI + "\" " + args + " >> run.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool run_pipeline(const fs::path& dir, std::string& detail) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "scene.json", std::ios::binary);
        cfg << R"({"width":128,"height":128,"bands":8,"n_residential":6,"n_nonresidential":4,)"
            << R"("min_building_px":8,"max_building_px":24,"noise_sigma":0.05,"seed":42})"
            << "\n";
    }
    const std::vector<std::string> steps = {
        "synth --config scene.json --out-image scene.mbr --out-annotations ann.json",
        "rasterize --image scene.mbr --annotations ann.json --out mask1.pgm",
        "rasterize --image scene.mbr --annotations ann.json --out mask2.pgm --palette stage2",
        "cv --image scene.mbr --mask mask1.pgm --out cv_rf.json --model rf --trees 50 --depth 50 "
        "--folds 5 --seed 42 --k 1 --no-hog",
        "cv --image scene.mbr --mask mask1.pgm --out cv_mlp.json --model mlp --hidden 16,16 "
        "--max-iter 300 --folds 5 --seed 42 --k 1 --no-hog",
        "cv --image scene.mbr --mask mask1.pgm --out cv_sgd.json --model sgd --epochs 5 "
        "--folds 5 --seed 42 --k 1 --no-hog",
        "cv --image scene.mbr --mask mask2.pgm --out cv_stage2.json --model rf --trees 50 "
        "--stage restype --folds 5 --seed 42 --k 1",
        "train --image scene.mbr --mask mask1.pgm --out model_rf.bin --model rf --trees 50 "
        "--seed 42 --k 1 --no-hog",
        "predict --model model_rf.bin --image scene.mbr --out probs.mbr --k 1 --no-hog",
        "train --image scene.mbr --mask mask2.pgm --out model_s2.bin --model rf --trees 50 "
        "--stage restype --seed 42 --k 1",
        "predict --model model_s2.bin --image scene.mbr --out probs_s2.mbr --k 1 --no-hog",
        "evaluate --probs probs.mbr --truth mask1.pgm --out-metrics metrics.json --sweep "
        "--out-roc roc.csv --out-confusion confusion.ppm",
        "estimate --p-building probs.mbr --p-res probs_s2.mbr --out report.json --benchmark",
    };
    for (const std::string& step : steps) {
        const int code = run_cli(dir, step);
        if (code != 0) {
            detail = "exit " + std::to_string(code) + " from: " + step;
            return false;
        }
    }
    return true;
}

double mean_metric(const fs::path& file, const std::string& key) {
    std::ifstream in(file);
    json j;
    in >> j;
    return j["mean"][key].get<double>();
}

void criteria_pipeline(const fs::path& root) {
    const fs::path dir_a = root / "run_a";
    std::string detail;
    if (!run_pipeline(dir_a, detail)) {
        report(8, "end-to-end synthetic pipeline", false, detail);
        report(9, "determinism of repeated pipeline", false, "pipeline failed");
        return;
    }

    const double rf_pj = mean_metric(dir_a / "cv_rf.json", "pixel_jaccard");
    const double rf_auc = mean_metric(dir_a / "cv_rf.json", "auc");
    const double mlp_pj = mean_metric(dir_a / "cv_mlp.json", "pixel_jaccard");
    const double mlp_auc = mean_metric(dir_a / "cv_mlp.json", "auc");
    const double sgd_pj = mean_metric(dir_a / "cv_sgd.json", "pixel_jaccard");
    const double s2_bal = mean_metric(dir_a / "cv_stage2.json", "balanced_accuracy");

    const bool ok8 = rf_pj >= 0.90 && rf_auc >= 0.98 && mlp_pj >= 0.90 && mlp_auc >= 0.98 &&
                     s2_bal >= 0.95 && sgd_pj <= rf_pj && sgd_pj <= mlp_pj;
    std::ostringstream d8;
    d8 << "rf P_J=" << rf_pj << " AUC=" << rf_auc << ", mlp P_J=" << mlp_pj << " AUC=" << mlp_auc
       << ", sgd P_J=" << sgd_pj << ", stage2 Abar=" << s2_bal;
    report(8, "end-to-end synthetic pipeline thresholds and ordering", ok8, d8.str());

    const fs::path dir_b = root / "run_b";
    if (!run_pipeline(dir_b, detail)) {
        report(9, "determinism of repeated pipeline", false, detail);
        return;
    }
    bool ok9 = true;
    std::string detail9;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "run.log") continue;  // carries wall-clock timings
        std::ifstream fa(entry.path(), std::ios::binary);
        std::ifstream fb(dir_b / name, std::ios::binary);
        std::ostringstream ba, bb;
        ba << fa.rdbuf();
        bb << fb.rdbuf();
        if (!fb || ba.str() != bb.str()) {
            ok9 = false;
            detail9 = "differs: " + name;
            break;
        }
    }
    report(9, "repeated pipeline artifacts are byte-identical", ok9, detail9);
}

// ---------- criterion 10 ----------

bool files_equal(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str();
}

void criterion_roundtrips(const fs::path& root) {
    const fs::path dir = root / "roundtrip";
    fs::remove_all(dir);
    fs::create_directories(dir);
    Rng rng(106);
    bool ok = true;
    std::string detail;

    const fs::path p1 = dir / "a.bin", p2 = dir / "b.bin";
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        const int kind = trial % 4;
        try {
            if (kind == 0) {
                MultibandImage img;
                img.width = 1 + static_cast<int>(rng.next_below(12));
                img.height = 1 + static_cast<int>(rng.next_below(12));
                img.bands = 1 + static_cast<int>(rng.next_below(8));
                img.data.resize(static_cast<std::size_t>(img.bands) * img.pixel_count());
                for (float& v : img.data) v = static_cast<float>(rng.next_gaussian());
                save_image(img, p1.string());
                save_image(load_image(p1.string()), p2.string());
            } else if (kind == 1) {
                Mask m;
                m.width = 1 + static_cast<int>(rng.next_below(16));
                m.height = 1 + static_cast<int>(rng.next_below(16));
                m.values.resize(static_cast<std::size_t>(m.width) * m.height);
                const std::uint8_t palette[3] = {0, 128, 255};
                for (auto& v : m.values) v = palette[rng.next_below(3)];
                save_mask(m, p1.string());
                save_mask(load_mask(p1.string()), p2.string());
            } else if (kind == 2) {
                AnnotationSet ann;
                const int n = static_cast<int>(rng.next_below(4));
                for (int i = 0; i < n; ++i) {
                    Polygon p;
                    p.class_label = rng.next_below(2) ? ClassLabel::Residential
                                                      : ClassLabel::NonResidential;
                    const int verts = 3 + static_cast<int>(rng.next_below(5));
                    for (int v = 0; v < verts; ++v)
                        p.exterior.emplace_back(rng.next_uniform(0, 50), rng.next_uniform(0, 50));
                    ann.polygons.push_back(p);
                }
                save_annotations(ann, p1.string());
                save_annotations(load_annotations(p1.string()), p2.string());
            } else {
                LinearModel m;
                const std::size_t dim = 1 + rng.next_below(20);
                m.weights.resize(dim);
                for (double& w : m.weights) w = rng.next_gaussian();
                m.bias = rng.next_gaussian();
                m.standardizer.mean.assign(dim, 0.0);
                m.standardizer.inv_std.assign(dim, 1.0);
                for (double& v : m.standardizer.mean) v = rng.next_gaussian();
                save_model(m, p1.string());
                save_model(*load_model(p1.string()), p2.string());
            }
        } catch (const std::exception& e) {
            ok = false;
            detail = "trial " + std::to_string(trial) + ": " + e.what();
            break;
        }
        if (!files_equal(p1, p2)) {
            ok = false;
            detail = "trial " + std::to_string(trial) + " kind " + std::to_string(kind);
        }
    }
    report(10, "1000 randomized format round-trips are bit-exact", ok, detail);
}

}  // namespace

int main() {
    const fs::path root = fs::temp_directory_path() / "aquifer_acceptance";
    fs::create_directories(root);

    criterion_consumption();
    criterion_benchmark();
    criterion_feature_dims();
    criterion_auc();
    criterion_threshold_sweep();
    criterion_rasterize_oracle();
    criterion_mlp_gradients();
    criteria_pipeline(root);
    criterion_roundtrips(root);

    if (g_failures) {
        std::cout << g_failures << " criteria failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
