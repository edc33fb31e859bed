#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "aquifer/evaluation.hpp"
#include "aquifer/learners.hpp"
#include "aquifer/rasterize.hpp"
#include "aquifer/scenegen.hpp"

using namespace aquifer;

TEST_CASE("same seed produces byte-identical scenes") {
    SceneConfig cfg;
    cfg.seed = 17;
    cfg.apply_default_profiles();
    const Scene a = generate_scene(cfg);
    const Scene b = generate_scene(cfg);
    CHECK(a.image.data == b.image.data);
    REQUIRE(a.annotations.polygons.size() == b.annotations.polygons.size());
    for (std::size_t i = 0; i < a.annotations.polygons.size(); ++i)
        CHECK(a.annotations.polygons[i].exterior == b.annotations.polygons[i].exterior);

    SceneConfig other = cfg;
    other.seed = 18;
    CHECK(generate_scene(other).image.data != a.image.data);
}

TEST_CASE("requested building counts and classes are honored") {
    SceneConfig cfg;
    cfg.seed = 3;
    cfg.n_residential = 5;
    cfg.n_nonresidential = 2;
    cfg.apply_default_profiles();
    const Scene s = generate_scene(cfg);
    int res = 0, nonres = 0;
    for (const Polygon& p : s.annotations.polygons) {
        if (p.class_label == ClassLabel::Residential) ++res;
        else if (p.class_label == ClassLabel::NonResidential) ++nonres;
    }
    CHECK(res == 5);
    CHECK(nonres == 2);
    CHECK(s.image.width == cfg.width);
    CHECK(s.image.height == cfg.height);
    CHECK(s.image.bands == cfg.bands);
    CHECK(s.image.pixel_size_m == doctest::Approx(cfg.pixel_size_m));
}

TEST_CASE("zero buildings gives pure background") {
    SceneConfig cfg;
    cfg.seed = 1;
    cfg.n_residential = 0;
    cfg.n_nonresidential = 0;
    cfg.noise_sigma = 0.0;
    cfg.apply_default_profiles();
    const Scene s = generate_scene(cfg);
    CHECK(s.annotations.polygons.empty());
    for (int b = 0; b < cfg.bands; ++b)
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x)
                CHECK(s.image.at(b, x, y) ==
                      doctest::Approx(cfg.background_profile[static_cast<std::size_t>(b)]));
}

TEST_CASE("noiseless pixels match their class profile exactly") {
    SceneConfig cfg;
    cfg.seed = 9;
    cfg.noise_sigma = 0.0;
    cfg.apply_default_profiles();
    const Scene s = generate_scene(cfg);

    const Mask res = rasterize_annotations(s.annotations, cfg.width, cfg.height,
                                           std::set<ClassLabel>{ClassLabel::Residential});
    const Mask nonres = rasterize_annotations(s.annotations, cfg.width, cfg.height,
                                              std::set<ClassLabel>{ClassLabel::NonResidential});
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const std::vector<double>* profile = &cfg.background_profile;
            if (res.at(x, y)) profile = &cfg.residential_profile;
            else if (nonres.at(x, y)) profile = &cfg.nonresidential_profile;
            for (int b = 0; b < cfg.bands; ++b)
                CHECK(s.image.at(b, x, y) ==
                      doctest::Approx((*profile)[static_cast<std::size_t>(b)]));
        }
}

TEST_CASE("footprints never overlap") {
    SceneConfig cfg;
    cfg.seed = 23;
    cfg.n_residential = 8;
    cfg.n_nonresidential = 6;
    cfg.apply_default_profiles();
    const Scene s = generate_scene(cfg);
    std::vector<int> coverage(static_cast<std::size_t>(cfg.width) * cfg.height, 0);
    for (const Polygon& p : s.annotations.polygons) {
        AnnotationSet one;
        one.polygons.push_back(p);
        const Mask m = rasterize_annotations(one, cfg.width, cfg.height);
        for (std::size_t i = 0; i < m.values.size(); ++i)
            if (m.values[i]) coverage[i]++;
    }
    for (int c : coverage) CHECK(c <= 1);
}

TEST_CASE("impossible congestion raises a configuration error") {
    SceneConfig cfg;
    cfg.width = 16;
    cfg.height = 16;
    cfg.n_residential = 40;
    cfg.n_nonresidential = 40;
    cfg.min_building_px = 8;
    cfg.max_building_px = 8;
    cfg.apply_default_profiles();
    CHECK_THROWS_AS(generate_scene(cfg), ConfigError);
}

TEST_CASE("config validation rejects nonsense") {
    SceneConfig cfg;
    cfg.apply_default_profiles();
    cfg.width = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SceneConfig{};
    cfg.apply_default_profiles();
    cfg.min_building_px = 10;
    cfg.max_building_px = 5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SceneConfig{};
    cfg.apply_default_profiles();
    cfg.noise_sigma = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SceneConfig{};
    cfg.apply_default_profiles();
    cfg.nonresidential_profile = cfg.residential_profile;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("a noiseless scene is perfectly learnable by a shallow tree") {
    SceneConfig cfg;
    cfg.seed = 5;
    cfg.width = 64;
    cfg.height = 64;
    cfg.noise_sigma = 0.0;
    cfg.apply_default_profiles();
    const Scene s = generate_scene(cfg);
    const Mask truth = rasterize_annotations(s.annotations, cfg.width, cfg.height);

    const FeatureMatrix X = expand_frame_features(s.image, FrameConfig{0});
    std::vector<std::uint8_t> y(truth.values.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = truth.values[i] ? 1 : 0;

    RfConfig rf;
    rf.n_estimators = 1;
    rf.max_depth = 2;
    rf.bootstrap = false;
    rf.min_samples_leaf = 1;
    const auto model = train_rf(InMemoryFeatureSource(X), y, rf);
    const std::vector<double> probs = model->predict_proba(X);
    const auto pred = apply_threshold(probs, 0.5);
    const MetricsReport m = metrics_from_confusion(confusion_counts(pred, y));
    CHECK(m.pixel_jaccard == 1.0);
}
