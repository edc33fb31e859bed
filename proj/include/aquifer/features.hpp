#pragma once

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aquifer/raster.hpp"

namespace aquifer {

// Frame expansion: each pixel becomes the concatenated bands of its
// (2k+1)x(2k+1) neighborhood, replicate-padded at the borders.
struct FrameConfig {
    int k = 4;

    void validate(int width, int height) const;
    int cols(int bands) const { return bands * (2 * k + 1) * (2 * k + 1); }
};

struct HogConfig {
    int cell_size = 8;
    int bins = 9;           // unsigned orientations over [0, 180)
    int block_cells = 2;    // block = block_cells x block_cells cells
    double epsilon = 1e-12; // L2 normalization guard

    void validate() const;
    int cols() const { return block_cells * block_cells * bins; }
};

struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;  // row-major
    std::vector<std::string> col_meaning;

    const float* row(std::size_t r) const { return data.data() + r * cols; }
    void validate() const;
};

FeatureMatrix expand_frame_features(const MultibandImage& image, const FrameConfig& cfg);

// Gradients via central differences on the band-mean channel; cell histograms
// with magnitude-weighted linear interpolation into orientation bins;
// non-overlapping blocks L2-normalized; each pixel inherits its block's
// descriptor.
FeatureMatrix compute_hog(const MultibandImage& image, const HogConfig& cfg);

// [frame | hog]; hog omitted when absent (stage-2 configuration).
FeatureMatrix assemble_features(const MultibandImage& image, const FrameConfig& frame_cfg,
                                const std::optional<HogConfig>& hog_cfg);

// Persisted form: one-line JSON header {rows, cols, dtype, col_meaning} + f32le payload.
void save_features(const FeatureMatrix& features, const std::string& path);
FeatureMatrix load_features(const std::string& path);

// Row source abstraction so trainers can stream mini-batches from disk when
// the matrix exceeds the memory budget.
class FeatureSource {
public:
    virtual ~FeatureSource() = default;
    virtual std::size_t rows() const = 0;
    virtual std::size_t cols() const = 0;
    // Copies rows [first, first+count) into out (count*cols floats).
    virtual void read_rows(std::size_t first, std::size_t count, float* out) const = 0;

    void read_row(std::size_t r, float* out) const { read_rows(r, 1, out); }
};

class InMemoryFeatureSource final : public FeatureSource {
public:
    explicit InMemoryFeatureSource(const FeatureMatrix& m) : m_(m) {}
    std::size_t rows() const override { return m_.rows; }
    std::size_t cols() const override { return m_.cols; }
    void read_rows(std::size_t first, std::size_t count, float* out) const override;

private:
    const FeatureMatrix& m_;
};

class DiskFeatureSource final : public FeatureSource {
public:
    explicit DiskFeatureSource(const std::string& path);
    ~DiskFeatureSource() override;
    std::size_t rows() const override { return rows_; }
    std::size_t cols() const override { return cols_; }
    void read_rows(std::size_t first, std::size_t count, float* out) const override;

private:
    std::FILE* file_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    long payload_offset_ = 0;
};

}  // namespace aquifer
