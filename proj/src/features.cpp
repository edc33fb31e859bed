#include "aquifer/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace aquifer {

void FrameConfig::validate(int width, int height) const {
    if (k < 0) throw ConfigError("frame width k must be non-negative");
    if (2 * k > std::min(width, height))
        throw ConfigError("frame width k=" + std::to_string(k) + " too large for a " +
                          std::to_string(width) + "x" + std::to_string(height) + " image");
}

void HogConfig::validate() const {
    if (cell_size < 2) throw ConfigError("HOG cell_size must be >= 2");
    if (bins < 2) throw ConfigError("HOG bins must be >= 2");
    if (block_cells < 1) throw ConfigError("HOG block must span >= 1 cell");
    if (!(epsilon > 0)) throw ConfigError("HOG epsilon must be positive");
}

void FeatureMatrix::validate() const {
    if (data.size() != rows * cols) throw ValidationError("feature data length != rows*cols");
    if (col_meaning.size() != cols) throw ValidationError("col_meaning length != cols");
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i]))
            throw ValidationError("non-finite feature at flat index " + std::to_string(i));
    }
}

FeatureMatrix expand_frame_features(const MultibandImage& image, const FrameConfig& cfg) {
    image.validate();
    cfg.validate(image.width, image.height);

    const int w = image.width, h = image.height, c = image.bands, k = cfg.k;
    const int side = 2 * k + 1;

    FeatureMatrix out;
    out.rows = image.pixel_count();
    out.cols = static_cast<std::size_t>(c) * side * side;
    out.data.resize(out.rows * out.cols);
    out.col_meaning.reserve(out.cols);
    for (int dy = -k; dy <= k; ++dy)
        for (int dx = -k; dx <= k; ++dx)
            for (int b = 0; b < c; ++b)
                out.col_meaning.push_back("frame:dy=" + std::to_string(dy) +
                                          ",dx=" + std::to_string(dx) +
                                          ",band=" + std::to_string(b));

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float* row = out.data.data() + (static_cast<std::size_t>(y) * w + x) * out.cols;
            std::size_t col = 0;
            for (int dy = -k; dy <= k; ++dy) {
                const int ny = std::clamp(y + dy, 0, h - 1);
                for (int dx = -k; dx <= k; ++dx) {
                    const int nx = std::clamp(x + dx, 0, w - 1);
                    for (int b = 0; b < c; ++b) row[col++] = image.at(b, nx, ny);
                }
            }
        }
    }
    return out;
}

FeatureMatrix compute_hog(const MultibandImage& image, const HogConfig& cfg) {
    image.validate();
    cfg.validate();
    const int w = image.width, h = image.height;
    if (w < cfg.cell_size || h < cfg.cell_size)
        throw ConfigError("image smaller than one HOG cell (" + std::to_string(cfg.cell_size) + " px)");

    // Band-mean channel.
    std::vector<double> channel(image.pixel_count(), 0.0);
    for (int b = 0; b < image.bands; ++b) {
        const float* plane = image.data.data() + static_cast<std::size_t>(b) * image.pixel_count();
        for (std::size_t i = 0; i < channel.size(); ++i) channel[i] += plane[i];
    }
    for (double& v : channel) v /= image.bands;
    auto ch = [&](int x, int y) { return channel[static_cast<std::size_t>(y) * w + x]; };

    const int cells_x = (w + cfg.cell_size - 1) / cfg.cell_size;
    const int cells_y = (h + cfg.cell_size - 1) / cfg.cell_size;
    const int bins = cfg.bins;
    const double bin_width = 180.0 / bins;

    // Cell histograms: magnitude-weighted votes split linearly between the
    // two nearest bin centers (centers at i*bin_width, circular over 180).
    std::vector<double> hist(static_cast<std::size_t>(cells_x) * cells_y * bins, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (x == 0)       ? ch(1, y) - ch(0, y)
                              : (x == w - 1) ? ch(w - 1, y) - ch(w - 2, y)
                                             : 0.5 * (ch(x + 1, y) - ch(x - 1, y));
            const double gy = (y == 0)       ? ch(x, 1) - ch(x, 0)
                              : (y == h - 1) ? ch(x, h - 1) - ch(x, h - 2)
                                             : 0.5 * (ch(x, y + 1) - ch(x, y - 1));
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx) * 180.0 / M_PI;  // unsigned orientation
            if (angle < 0) angle += 180.0;
            if (angle >= 180.0) angle -= 180.0;

            const double pos = angle / bin_width;
            const int lo = static_cast<int>(std::floor(pos)) % bins;
            const int hi = (lo + 1) % bins;
            const double frac = pos - std::floor(pos);
            const std::size_t cell =
                (static_cast<std::size_t>(y / cfg.cell_size) * cells_x + x / cfg.cell_size) *
                bins;
            hist[cell + lo] += mag * (1.0 - frac);
            hist[cell + hi] += mag * frac;
        }
    }

    // Non-overlapping blocks of block_cells x block_cells cells; cells past the
    // image edge contribute zeros so every descriptor has a fixed length.
    const int bc = cfg.block_cells;
    const int blocks_x = (cells_x + bc - 1) / bc;
    const int blocks_y = (cells_y + bc - 1) / bc;
    const std::size_t desc_len = static_cast<std::size_t>(bc) * bc * bins;
    std::vector<double> blocks(static_cast<std::size_t>(blocks_x) * blocks_y * desc_len, 0.0);
    for (int by = 0; by < blocks_y; ++by) {
        for (int bx = 0; bx < blocks_x; ++bx) {
            double* desc = blocks.data() + (static_cast<std::size_t>(by) * blocks_x + bx) * desc_len;
            std::size_t d = 0;
            for (int cy = by * bc; cy < (by + 1) * bc; ++cy) {
                for (int cx = bx * bc; cx < (bx + 1) * bc; ++cx) {
                    if (cy < cells_y && cx < cells_x) {
                        const double* src = hist.data() + (static_cast<std::size_t>(cy) * cells_x + cx) * bins;
                        for (int b = 0; b < bins; ++b) desc[d + b] = src[b];
                    }
                    d += bins;
                }
            }
            double norm2 = 0.0;
            for (std::size_t i = 0; i < desc_len; ++i) norm2 += desc[i] * desc[i];
            const double inv = 1.0 / std::sqrt(norm2 + cfg.epsilon * cfg.epsilon);
            for (std::size_t i = 0; i < desc_len; ++i) desc[i] *= inv;
        }
    }

    FeatureMatrix out;
    out.rows = image.pixel_count();
    out.cols = desc_len;
    out.data.resize(out.rows * out.cols);
    out.col_meaning.reserve(desc_len);
    for (int cy = 0; cy < bc; ++cy)
        for (int cx = 0; cx < bc; ++cx)
            for (int b = 0; b < bins; ++b)
                out.col_meaning.push_back("hog:cell=" + std::to_string(cy) + "," +
                                          std::to_string(cx) + ",bin=" + std::to_string(b));

    for (int y = 0; y < h; ++y) {
        const int by = (y / cfg.cell_size) / bc;
        for (int x = 0; x < w; ++x) {
            const int bx = (x / cfg.cell_size) / bc;
            const double* desc = blocks.data() + (static_cast<std::size_t>(by) * blocks_x + bx) * desc_len;
            float* row = out.data.data() + (static_cast<std::size_t>(y) * w + x) * desc_len;
            for (std::size_t i = 0; i < desc_len; ++i) row[i] = static_cast<float>(desc[i]);
        }
    }
    return out;
}

FeatureMatrix assemble_features(const MultibandImage& image, const FrameConfig& frame_cfg,
                                const std::optional<HogConfig>& hog_cfg) {
    FeatureMatrix frame = expand_frame_features(image, frame_cfg);
    if (!hog_cfg) return frame;

    FeatureMatrix hog = compute_hog(image, *hog_cfg);
    FeatureMatrix out;
    out.rows = frame.rows;
    out.cols = frame.cols + hog.cols;
    out.data.resize(out.rows * out.cols);
    out.col_meaning = frame.col_meaning;
    out.col_meaning.insert(out.col_meaning.end(), hog.col_meaning.begin(), hog.col_meaning.end());
    for (std::size_t r = 0; r < out.rows; ++r) {
        float* dst = out.data.data() + r * out.cols;
        std::memcpy(dst, frame.row(r), frame.cols * sizeof(float));
        std::memcpy(dst + frame.cols, hog.row(r), hog.cols * sizeof(float));
    }
    return out;
}

void save_features(const FeatureMatrix& features, const std::string& path) {
    features.validate();
    nlohmann::ordered_json j;
    j["rows"] = features.rows;
    j["cols"] = features.cols;
    j["dtype"] = "f32le";
    j["col_meaning"] = features.col_meaning;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    const std::string header = j.dump() + "\n";
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(features.data.data()),
              static_cast<std::streamsize>(features.data.size() * 4));
    if (!out) throw IoError("write failed: " + path);
}

FeatureMatrix load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header)) throw FormatError("missing header line: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed feature header in " + path + ": " + e.what());
    }
    FeatureMatrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    if (j.at("dtype") != "f32le") throw FormatError("feature dtype must be f32le: " + path);
    m.col_meaning = j.at("col_meaning").get<std::vector<std::string>>();
    m.data.resize(m.rows * m.cols);
    in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * 4));
    if (static_cast<std::size_t>(in.gcount()) != m.data.size() * 4)
        throw FormatError("feature payload size mismatch: " + path);
    m.validate();
    return m;
}

void InMemoryFeatureSource::read_rows(std::size_t first, std::size_t count, float* out) const {
    std::memcpy(out, m_.data.data() + first * m_.cols, count * m_.cols * sizeof(float));
}

DiskFeatureSource::DiskFeatureSource(const std::string& path) {
    file_ = std::fopen(path.c_str(), "rb");
    if (!file_) throw IoError("cannot open: " + path);
    std::string header;
    for (;;) {
        const int c = std::fgetc(file_);
        if (c == EOF) {
            std::fclose(file_);
            throw FormatError("missing header line: " + path);
        }
        if (c == '\n') break;
        header.push_back(static_cast<char>(c));
    }
    try {
        nlohmann::json j = nlohmann::json::parse(header);
        rows_ = j.at("rows").get<std::size_t>();
        cols_ = j.at("cols").get<std::size_t>();
        if (j.at("dtype") != "f32le") throw FormatError("feature dtype must be f32le: " + path);
    } catch (const nlohmann::json::exception& e) {
        std::fclose(file_);
        throw FormatError("malformed feature header in " + path + ": " + e.what());
    }
    payload_offset_ = std::ftell(file_);
}

DiskFeatureSource::~DiskFeatureSource() {
    if (file_) std::fclose(file_);
}

void DiskFeatureSource::read_rows(std::size_t first, std::size_t count, float* out) const {
    const long offset = payload_offset_ + static_cast<long>(first * cols_ * sizeof(float));
    if (std::fseek(file_, offset, SEEK_SET) != 0) throw IoError("seek failed in feature file");
    const std::size_t want = count * cols_;
    if (std::fread(out, sizeof(float), want, file_) != want)
        throw FormatError("feature payload truncated");
}

}  // namespace aquifer
