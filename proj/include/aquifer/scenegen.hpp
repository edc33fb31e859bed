#pragma once

#include <cstdint>
#include <vector>

#include "aquifer/raster.hpp"

namespace aquifer {

// Deterministic synthetic scenes with known footprints, standing in for
// non-redistributable source imagery during tests.
struct SceneConfig {
    int width = 128;
    int height = 128;
    int bands = 8;
    double pixel_size_m = 1.24;
    int n_residential = 6;
    int n_nonresidential = 4;
    int min_building_px = 8;
    int max_building_px = 24;
    std::vector<double> background_profile;      // per-band means; sized to bands
    std::vector<double> residential_profile;
    std::vector<double> nonresidential_profile;
    double noise_sigma = 0.05;
    bool rotated = false;
    std::uint64_t seed = 0;

    // Fills empty profiles with defaults that are not linearly separable for
    // stage 1 (background between the two building profiles).
    void apply_default_profiles();
    void validate() const;
};

struct Scene {
    MultibandImage image;
    AnnotationSet annotations;
};

// Rejection-sampled non-overlapping rectangles; per-pixel class from the
// rasterized footprints; per-band Gaussian noise around the class profile.
// Fully deterministic per seed.
Scene generate_scene(const SceneConfig& cfg);

SceneConfig scene_config_from_json_file(const std::string& path);

}  // namespace aquifer
