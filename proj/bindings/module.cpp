#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <set>

#include "aquifer/estimation.hpp"
#include "aquifer/evaluation.hpp"
#include "aquifer/features.hpp"
#include "aquifer/learners.hpp"
#include "aquifer/rasterize.hpp"
#include "aquifer/scenegen.hpp"

namespace py = pybind11;
using namespace aquifer;

namespace {

MultibandImage image_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr,
                                double pixel_size_m) {
    if (arr.ndim() != 3) throw ShapeError("image array must be (bands, height, width)");
    MultibandImage img;
    img.bands = static_cast<int>(arr.shape(0));
    img.height = static_cast<int>(arr.shape(1));
    img.width = static_cast<int>(arr.shape(2));
    img.pixel_size_m = pixel_size_m;
    img.data.assign(arr.data(), arr.data() + arr.size());
    img.validate();
    return img;
}

py::array_t<float> image_to_array(const MultibandImage& img) {
    py::array_t<float> arr({img.bands, img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
}

Mask mask_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw ShapeError("mask array must be (height, width)");
    Mask m;
    m.height = static_cast<int>(arr.shape(0));
    m.width = static_cast<int>(arr.shape(1));
    m.values.assign(arr.data(), arr.data() + arr.size());
    return m;
}

py::array_t<std::uint8_t> mask_to_array(const Mask& m) {
    py::array_t<std::uint8_t> arr({m.height, m.width});
    std::copy(m.values.begin(), m.values.end(), arr.mutable_data());
    return arr;
}

FeatureMatrix features_from_array(
    const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw ShapeError("feature array must be (rows, cols)");
    FeatureMatrix m;
    m.rows = static_cast<std::size_t>(arr.shape(0));
    m.cols = static_cast<std::size_t>(arr.shape(1));
    m.data.assign(arr.data(), arr.data() + arr.size());
    m.col_meaning.assign(m.cols, "column");
    return m;
}

py::array_t<float> features_to_array(const FeatureMatrix& m) {
    py::array_t<float> arr({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
    std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
    return arr;
}

std::vector<std::uint8_t> labels_from_array(
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr) {
    return {arr.data(), arr.data() + arr.size()};
}

py::dict polygon_to_dict(const Polygon& p) {
    py::dict d;
    d["class"] = class_label_name(p.class_label);
    py::list ext;
    for (const auto& [x, y] : p.exterior) ext.append(py::make_tuple(x, y));
    d["exterior"] = ext;
    py::list holes;
    for (const auto& hole : p.holes) {
        py::list ring;
        for (const auto& [x, y] : hole) ring.append(py::make_tuple(x, y));
        holes.append(ring);
    }
    d["holes"] = holes;
    return d;
}

Polygon polygon_from_dict(const py::dict& d) {
    Polygon p;
    if (d.contains("class")) p.class_label = class_label_from_name(d["class"].cast<std::string>());
    for (const auto& pt : d["exterior"].cast<py::list>()) {
        const auto t = pt.cast<std::pair<double, double>>();
        p.exterior.push_back(t);
    }
    if (d.contains("holes")) {
        for (const auto& ring : d["holes"].cast<py::list>()) {
            std::vector<std::pair<double, double>> hole;
            for (const auto& pt : ring.cast<py::list>())
                hole.push_back(pt.cast<std::pair<double, double>>());
            p.holes.push_back(std::move(hole));
        }
    }
    return p;
}

AnnotationSet annotations_from_list(const py::list& polys) {
    AnnotationSet ann;
    for (const auto& item : polys) ann.polygons.push_back(polygon_from_dict(item.cast<py::dict>()));
    return ann;
}

py::dict metrics_to_dict(const MetricsReport& m) {
    py::dict d;
    d["pixel_jaccard"] = m.pixel_jaccard;
    d["pos_accuracy"] = m.pos_accuracy;
    d["neg_accuracy"] = m.neg_accuracy;
    d["balanced_accuracy"] = m.balanced_accuracy;
    d["auc"] = m.auc;
    d["optimal_threshold"] = m.optimal_threshold;
    d["degenerate"] = m.degenerate;
    return d;
}

class PyModel {
public:
    explicit PyModel(std::unique_ptr<TrainedModel> model) : model_(std::move(model)) {}

    std::string kind() const { return model_->kind(); }
    std::size_t feature_dim() const { return model_->feature_dim(); }
    double default_threshold() const { return model_->default_threshold(); }

    py::array_t<double> predict_proba(
        const py::array_t<float, py::array::c_style | py::array::forcecast>& X) const {
        const FeatureMatrix m = features_from_array(X);
        const std::vector<double> probs = model_->predict_proba(m);
        py::array_t<double> arr(static_cast<py::ssize_t>(probs.size()));
        std::copy(probs.begin(), probs.end(), arr.mutable_data());
        return arr;
    }

    void save(const std::string& path) const { save_model(*model_, path); }

private:
    std::unique_ptr<TrainedModel> model_;
};

}  // namespace

PYBIND11_MODULE(_aquifer, m) {
    m.doc() = "building detection, classification, and water-consumption estimation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // raster IO
    m.def("load_image", [](const std::string& path) {
        const MultibandImage img = load_image(path);
        return py::make_tuple(image_to_array(img), img.pixel_size_m);
    });
    m.def(
        "save_image",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& arr,
           const std::string& path, double pixel_size_m) {
            save_image(image_from_array(arr, pixel_size_m), path);
        },
        py::arg("image"), py::arg("path"), py::arg("pixel_size_m") = 1.24);
    m.def("load_mask", [](const std::string& path) { return mask_to_array(load_mask(path)); });
    m.def("save_mask",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             const std::string& path) { save_mask(mask_from_array(arr), path); });

    // scene generation
    m.def(
        "generate_scene",
        [](int width, int height, int bands, int n_residential, int n_nonresidential,
           int min_building_px, int max_building_px, double noise_sigma, bool rotated,
           std::uint64_t seed) {
            SceneConfig cfg;
            cfg.width = width;
            cfg.height = height;
            cfg.bands = bands;
            cfg.n_residential = n_residential;
            cfg.n_nonresidential = n_nonresidential;
            cfg.min_building_px = min_building_px;
            cfg.max_building_px = max_building_px;
            cfg.noise_sigma = noise_sigma;
            cfg.rotated = rotated;
            cfg.seed = seed;
            const Scene scene = generate_scene(cfg);
            py::list polys;
            for (const Polygon& p : scene.annotations.polygons) polys.append(polygon_to_dict(p));
            return py::make_tuple(image_to_array(scene.image), polys);
        },
        py::arg("width") = 128, py::arg("height") = 128, py::arg("bands") = 8,
        py::arg("n_residential") = 6, py::arg("n_nonresidential") = 4,
        py::arg("min_building_px") = 8, py::arg("max_building_px") = 24,
        py::arg("noise_sigma") = 0.05, py::arg("rotated") = false, py::arg("seed") = 0);

    // rasterization
    m.def(
        "rasterize",
        [](const py::list& polygons, int width, int height,
           const std::optional<std::vector<std::string>>& classes) {
            std::optional<std::set<ClassLabel>> filter;
            if (classes) {
                filter.emplace();
                for (const std::string& name : *classes) filter->insert(class_label_from_name(name));
            }
            return mask_to_array(
                rasterize_annotations(annotations_from_list(polygons), width, height, filter));
        },
        py::arg("polygons"), py::arg("width"), py::arg("height"),
        py::arg("classes") = std::nullopt);

    // features
    m.def(
        "expand_frame_features",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& image, int k) {
            return features_to_array(expand_frame_features(image_from_array(image, 1.24), FrameConfig{k}));
        },
        py::arg("image"), py::arg("k") = 4);
    m.def(
        "compute_hog",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& image, int cell,
           int bins) {
            HogConfig cfg;
            cfg.cell_size = cell;
            cfg.bins = bins;
            return features_to_array(compute_hog(image_from_array(image, 1.24), cfg));
        },
        py::arg("image"), py::arg("cell") = 8, py::arg("bins") = 9);
    m.def(
        "assemble_features",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& image, int k,
           bool hog) {
            std::optional<HogConfig> h;
            if (hog) h = HogConfig{};
            return features_to_array(assemble_features(image_from_array(image, 1.24), FrameConfig{k}, h));
        },
        py::arg("image"), py::arg("k") = 4, py::arg("hog") = true);

    // learners
    py::class_<PyModel>(m, "Model")
        .def_property_readonly("kind", &PyModel::kind)
        .def_property_readonly("feature_dim", &PyModel::feature_dim)
        .def_property_readonly("default_threshold", &PyModel::default_threshold)
        .def("predict_proba", &PyModel::predict_proba)
        .def("save", &PyModel::save);

    m.def(
        "train_sgd",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& X,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& y,
           const std::string& loss, double alpha, double eta0, int epochs, bool balanced,
           std::uint64_t seed) {
            SgdConfig cfg;
            cfg.loss = loss == "modified_huber" ? SgdLoss::ModifiedHuber : SgdLoss::Logistic;
            cfg.l2_alpha = alpha;
            cfg.eta0 = eta0;
            cfg.epochs = epochs;
            cfg.class_weight = balanced ? ClassWeight::Balanced : ClassWeight::None;
            cfg.seed = seed;
            const FeatureMatrix m = features_from_array(X);
            InMemoryFeatureSource src(m);
            return PyModel(train_sgd(src, labels_from_array(y), cfg));
        },
        py::arg("X"), py::arg("y"), py::arg("loss") = "logistic", py::arg("alpha") = 1e-3,
        py::arg("eta0") = 0.01, py::arg("epochs") = 5, py::arg("balanced") = true,
        py::arg("seed") = 0);
    m.def(
        "train_rf",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& X,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& y, int trees,
           int depth, int min_leaf, int min_split, bool balanced, bool bootstrap,
           std::uint64_t seed, int threads) {
            RfConfig cfg;
            cfg.n_estimators = trees;
            cfg.max_depth = depth;
            cfg.min_samples_leaf = min_leaf;
            cfg.min_samples_split = min_split;
            cfg.class_weight = balanced ? ClassWeight::Balanced : ClassWeight::None;
            cfg.bootstrap = bootstrap;
            cfg.seed = seed;
            const FeatureMatrix m = features_from_array(X);
            InMemoryFeatureSource src(m);
            return PyModel(train_rf(src, labels_from_array(y), cfg, threads));
        },
        py::arg("X"), py::arg("y"), py::arg("trees") = 500, py::arg("depth") = 50,
        py::arg("min_leaf") = 2, py::arg("min_split") = 2, py::arg("balanced") = true,
        py::arg("bootstrap") = true, py::arg("seed") = 0, py::arg("threads") = 0);
    m.def(
        "train_mlp",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& X,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& y,
           const std::vector<int>& hidden, int max_iter, int batch_size, bool balanced,
           std::uint64_t seed) {
            MlpConfig cfg;
            cfg.hidden_layer_sizes = hidden;
            cfg.max_iter = max_iter;
            cfg.batch_size = batch_size;
            cfg.class_weight = balanced ? ClassWeight::Balanced : ClassWeight::None;
            cfg.seed = seed;
            const FeatureMatrix m = features_from_array(X);
            InMemoryFeatureSource src(m);
            return PyModel(train_mlp(src, labels_from_array(y), cfg));
        },
        py::arg("X"), py::arg("y"), py::arg("hidden") = std::vector<int>{75, 25, 100, 20, 75, 25},
        py::arg("max_iter") = 1000, py::arg("batch_size") = 256, py::arg("balanced") = true,
        py::arg("seed") = 0);
    m.def("load_model",
          [](const std::string& path) { return PyModel(load_model(path)); });

    // evaluation
    m.def(
        "metrics",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& pred,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& truth) {
            return metrics_to_dict(metrics_from_confusion(
                confusion_counts(labels_from_array(pred), labels_from_array(truth))));
        },
        py::arg("pred"), py::arg("truth"));
    m.def(
        "roc_auc",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& probs,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& truth) {
            const std::vector<double> p(probs.data(), probs.data() + probs.size());
            return auc_trapezoid(roc_curve(p, labels_from_array(truth)));
        },
        py::arg("probs"), py::arg("truth"));
    m.def(
        "optimal_threshold",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& probs,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& truth) {
            const std::vector<double> p(probs.data(), probs.data() + probs.size());
            return optimal_threshold(p, labels_from_array(truth));
        },
        py::arg("probs"), py::arg("truth"));

    // estimation
    m.def(
        "expected_areas",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& p_building,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& p_res,
           double pixel_size_m) {
            auto to_mask = [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
                if (a.ndim() != 2) throw ShapeError("probability array must be (height, width)");
                ProbabilityMask pm;
                pm.height = static_cast<int>(a.shape(0));
                pm.width = static_cast<int>(a.shape(1));
                pm.probs.assign(a.data(), a.data() + a.size());
                return pm;
            };
            return expected_areas(to_mask(p_building), to_mask(p_res),
                                  PixelGeometry{pixel_size_m * pixel_size_m});
        },
        py::arg("p_building"), py::arg("p_res"), py::arg("pixel_size_m") = 1.24);
    m.def(
        "water_consumption",
        [](double area_residential_m2, double area_nonresidential_m2, double w_r, double w_nr,
           double occupancy_ft2) {
            ConsumptionRates rates;
            rates.w_r_gal_per_person_day = w_r;
            rates.w_nr_gal_per_person_day = w_nr;
            rates.occupancy_ft2_per_person = occupancy_ft2;
            const ConsumptionReport r =
                water_consumption(area_residential_m2, area_nonresidential_m2, rates);
            py::dict d;
            d["area_residential_m2"] = r.area_residential_m2;
            d["area_nonresidential_m2"] = r.area_nonresidential_m2;
            d["residential_share_gal"] = r.residential_share_gal;
            d["nonresidential_share_gal"] = r.nonresidential_share_gal;
            d["water_gal_per_day"] = r.water_gal_per_day;
            return d;
        },
        py::arg("area_residential_m2"), py::arg("area_nonresidential_m2"), py::arg("w_r") = 40.0,
        py::arg("w_nr") = 21.0, py::arg("occupancy_ft2") = 750.0);
}
