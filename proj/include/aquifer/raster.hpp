#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aquifer/errors.hpp"

namespace aquifer {

// Band-planar float raster: data[band * w * h + y * w + x].
struct MultibandImage {
    int width = 0;
    int height = 0;
    int bands = 0;
    double pixel_size_m = 1.24;
    std::vector<float> data;

    float at(int band, int x, int y) const {
        return data[static_cast<std::size_t>(band) * width * height +
                    static_cast<std::size_t>(y) * width + x];
    }
    float& at(int band, int x, int y) {
        return data[static_cast<std::size_t>(band) * width * height +
                    static_cast<std::size_t>(y) * width + x];
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    void validate() const;
};

enum class ClassLabel { Residential, NonResidential, UnclassifiedBuilding };

std::string class_label_name(ClassLabel label);
ClassLabel class_label_from_name(const std::string& name);

struct Polygon {
    ClassLabel class_label = ClassLabel::UnclassifiedBuilding;
    std::vector<std::pair<double, double>> exterior;  // rings implicitly closed
    std::vector<std::vector<std::pair<double, double>>> holes;
};

struct AnnotationSet {
    std::vector<Polygon> polygons;
    void validate() const;
};

// 8-bit label raster. Stage 1 uses {0, 255}; stage 2 uses {0, 128, 255}
// (0 = non-building, 128 = residential, 255 = non-residential).
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;

    std::uint8_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct ProbabilityMask {
    int width = 0;
    int height = 0;
    std::vector<float> probs;

    void validate() const;
};

// MBR container: one-line JSON header + band-planar little-endian f32 payload.
MultibandImage load_image(const std::string& path);
void save_image(const MultibandImage& image, const std::string& path);

AnnotationSet load_annotations(const std::string& path);
void save_annotations(const AnnotationSet& ann, const std::string& path);

// Binary PGM (P5, maxval 255). save_mask validates against the stage palettes.
Mask load_mask(const std::string& path);
void save_mask(const Mask& mask, const std::string& path);

// Stored as a 1-band MBR.
ProbabilityMask load_probability_mask(const std::string& path);
void save_probability_mask(const ProbabilityMask& mask, const std::string& path);

}  // namespace aquifer
