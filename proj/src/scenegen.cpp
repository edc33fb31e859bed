#include "aquifer/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "aquifer/rasterize.hpp"
#include "aquifer/rng.hpp"

namespace aquifer {

void SceneConfig::apply_default_profiles() {
    if (background_profile.empty()) background_profile.assign(bands, 0.5);
    if (residential_profile.empty()) residential_profile.assign(bands, 0.8);
    if (nonresidential_profile.empty()) nonresidential_profile.assign(bands, 0.2);
}

void SceneConfig::validate() const {
    if (width < 1 || height < 1) throw ConfigError("scene dimensions must be >= 1");
    if (bands < 1 || bands > 16) throw ConfigError("bands must be in [1, 16]");
    if (n_residential < 0 || n_nonresidential < 0) throw ConfigError("building counts must be >= 0");
    if (min_building_px < 1 || max_building_px < min_building_px)
        throw ConfigError("invalid building size range");
    if (max_building_px + 2 > std::min(width, height))
        throw ConfigError("building size range does not fit the image");
    if (noise_sigma < 0) throw ConfigError("noise_sigma must be >= 0");
    for (const auto* p : {&background_profile, &residential_profile, &nonresidential_profile}) {
        if (p->size() != static_cast<std::size_t>(bands))
            throw ConfigError("spectral profile length must equal bands");
    }
    // Distinct class profiles; degenerate profiles would make labels meaningless.
    double sep = 0.0;
    for (int b = 0; b < bands; ++b) {
        const double d = residential_profile[b] - nonresidential_profile[b];
        sep += d * d;
    }
    if ((n_residential > 0 || n_nonresidential > 0) && std::sqrt(sep) < 1e-6)
        throw ConfigError("residential and non-residential profiles must be distinct");
}

namespace {

struct Box {
    double x0, y0, x1, y1;
    bool overlaps(const Box& o) const {
        return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }
};

Polygon make_footprint(const SceneConfig& cfg, ClassLabel label, Rng& rng, Box& bbox) {
    const double w = rng.next_uniform(cfg.min_building_px, cfg.max_building_px);
    const double h = rng.next_uniform(cfg.min_building_px, cfg.max_building_px);
    const double margin = cfg.rotated ? std::hypot(w, h) / 2.0 : std::max(w, h) / 2.0;
    const double cx = rng.next_uniform(margin + 1.0, cfg.width - margin - 1.0);
    const double cy = rng.next_uniform(margin + 1.0, cfg.height - margin - 1.0);

    Polygon poly;
    poly.class_label = label;
    const double angle = cfg.rotated ? rng.next_uniform(0.0, M_PI / 2.0) : 0.0;
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (const auto [ux, uy] : {std::pair{-0.5, -0.5}, std::pair{0.5, -0.5},
                                std::pair{0.5, 0.5}, std::pair{-0.5, 0.5}}) {
        const double dx = ux * w, dy = uy * h;
        poly.exterior.emplace_back(cx + dx * ca - dy * sa, cy + dx * sa + dy * ca);
    }

    double min_x = poly.exterior[0].first, max_x = min_x;
    double min_y = poly.exterior[0].second, max_y = min_y;
    for (const auto& [vx, vy] : poly.exterior) {
        min_x = std::min(min_x, vx);
        max_x = std::max(max_x, vx);
        min_y = std::min(min_y, vy);
        max_y = std::max(max_y, vy);
    }
    // 1 px gap so adjacent footprints never share pixels
    bbox = {min_x - 1.0, min_y - 1.0, max_x + 1.0, max_y + 1.0};
    return poly;
}

}  // namespace

Scene generate_scene(const SceneConfig& raw_cfg) {
    SceneConfig cfg = raw_cfg;
    cfg.apply_default_profiles();
    cfg.validate();

    Rng place_rng = Rng(cfg.seed).split(0);
    Rng noise_rng = Rng(cfg.seed).split(1);

    Scene scene;
    std::vector<Box> boxes;
    const int total = cfg.n_residential + cfg.n_nonresidential;
    const int max_attempts = 1000 * std::max(1, total);
    int attempts = 0;
    for (int i = 0; i < total; ++i) {
        const ClassLabel label =
            i < cfg.n_residential ? ClassLabel::Residential : ClassLabel::NonResidential;
        for (;;) {
            if (++attempts > max_attempts)
                throw ConfigError("could not place " + std::to_string(total) +
                                  " buildings without overlap; use fewer or smaller buildings");
            Box bbox{};
            Polygon poly = make_footprint(cfg, label, place_rng, bbox);
            const bool clash = std::any_of(boxes.begin(), boxes.end(),
                                           [&](const Box& b) { return b.overlaps(bbox); });
            if (clash) continue;
            boxes.push_back(bbox);
            scene.annotations.polygons.push_back(std::move(poly));
            break;
        }
    }

    // Per-pixel class from the same rasterization the pipeline uses.
    std::vector<std::uint8_t> cls(static_cast<std::size_t>(cfg.width) * cfg.height, 0);
    for (const Polygon& poly : scene.annotations.polygons) {
        AnnotationSet one;
        one.polygons.push_back(poly);
        const Mask m = rasterize_annotations(one, cfg.width, cfg.height);
        const std::uint8_t code = poly.class_label == ClassLabel::Residential ? 1 : 2;
        for (std::size_t i = 0; i < m.values.size(); ++i)
            if (m.values[i]) cls[i] = code;
    }

    MultibandImage& img = scene.image;
    img.width = cfg.width;
    img.height = cfg.height;
    img.bands = cfg.bands;
    img.pixel_size_m = cfg.pixel_size_m;
    img.data.resize(static_cast<std::size_t>(cfg.bands) * img.pixel_count());

    // Single row-major pass with one noise stream keeps generation deterministic.
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            const std::uint8_t c = cls[static_cast<std::size_t>(y) * cfg.width + x];
            const std::vector<double>& profile = c == 0   ? cfg.background_profile
                                                 : c == 1 ? cfg.residential_profile
                                                          : cfg.nonresidential_profile;
            for (int b = 0; b < cfg.bands; ++b) {
                const double noise =
                    cfg.noise_sigma > 0 ? cfg.noise_sigma * noise_rng.next_gaussian() : 0.0;
                img.at(b, x, y) = static_cast<float>(profile[b] + noise);
            }
        }
    }
    return scene;
}

SceneConfig scene_config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed scene config in " + path + ": " + e.what());
    }
    SceneConfig cfg;
    cfg.width = j.value("width", cfg.width);
    cfg.height = j.value("height", cfg.height);
    cfg.bands = j.value("bands", cfg.bands);
    cfg.pixel_size_m = j.value("pixel_size_m", cfg.pixel_size_m);
    cfg.n_residential = j.value("n_residential", cfg.n_residential);
    cfg.n_nonresidential = j.value("n_nonresidential", cfg.n_nonresidential);
    cfg.min_building_px = j.value("min_building_px", cfg.min_building_px);
    cfg.max_building_px = j.value("max_building_px", cfg.max_building_px);
    cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
    cfg.rotated = j.value("rotated", cfg.rotated);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("background_profile"))
        cfg.background_profile = j["background_profile"].get<std::vector<double>>();
    if (j.contains("residential_profile"))
        cfg.residential_profile = j["residential_profile"].get<std::vector<double>>();
    if (j.contains("nonresidential_profile"))
        cfg.nonresidential_profile = j["nonresidential_profile"].get<std::vector<double>>();
    return cfg;
}

}  // namespace aquifer
