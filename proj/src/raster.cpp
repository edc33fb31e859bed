#include "aquifer/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace aquifer {

namespace {

using ordered_json = nlohmann::ordered_json;

void write_bytes(std::ofstream& out, const void* p, std::size_t n, const std::string& path) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out) throw IoError("write failed: " + path);
}

std::string read_header_line(std::ifstream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("missing header line: " + path);
    return line;
}

// Floats are stored little-endian; this code assumes a little-endian host.
static_assert(sizeof(float) == 4);

}  // namespace

void MultibandImage::validate() const {
    if (width < 1 || height < 1) throw ValidationError("image dimensions must be >= 1");
    if (bands < 1 || bands > 16) throw ValidationError("bands must be in [1, 16]");
    if (!(pixel_size_m > 0)) throw ValidationError("pixel_size_m must be positive");
    const std::size_t expected = static_cast<std::size_t>(bands) * pixel_count();
    if (data.size() != expected) {
        throw ValidationError("image data length " + std::to_string(data.size()) +
                              " does not match bands*width*height = " + std::to_string(expected));
    }
}

void ProbabilityMask::validate() const {
    if (width < 1 || height < 1) throw ValidationError("probability mask dimensions must be >= 1");
    if (probs.size() != static_cast<std::size_t>(width) * height)
        throw ValidationError("probability mask length does not match width*height");
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const float p = probs[i];
        if (!std::isfinite(p) || p < 0.0f || p > 1.0f)
            throw ValidationError("probability out of [0,1] at index " + std::to_string(i));
    }
}

std::string class_label_name(ClassLabel label) {
    switch (label) {
        case ClassLabel::Residential: return "residential";
        case ClassLabel::NonResidential: return "non_residential";
        case ClassLabel::UnclassifiedBuilding: return "unclassified_building";
    }
    throw ValidationError("unknown class label");
}

ClassLabel class_label_from_name(const std::string& name) {
    if (name == "residential") return ClassLabel::Residential;
    if (name == "non_residential") return ClassLabel::NonResidential;
    if (name == "unclassified_building") return ClassLabel::UnclassifiedBuilding;
    throw ValidationError("unknown class label: " + name);
}

void AnnotationSet::validate() const {
    for (std::size_t i = 0; i < polygons.size(); ++i) {
        const Polygon& p = polygons[i];
        auto check_ring = [&](const std::vector<std::pair<double, double>>& ring) {
            if (ring.size() < 3)
                throw ValidationError("polygon " + std::to_string(i) + " has a ring with < 3 vertices");
            for (const auto& [x, y] : ring) {
                if (!std::isfinite(x) || !std::isfinite(y))
                    throw ValidationError("polygon " + std::to_string(i) + " has a non-finite vertex");
            }
        };
        check_ring(p.exterior);
        for (const auto& hole : p.holes) check_ring(hole);
    }
}

MultibandImage load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    const std::string header = read_header_line(in, path);

    ordered_json j;
    try {
        j = ordered_json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed MBR header in " + path + ": " + e.what());
    }
    for (const char* field : {"width", "height", "bands", "pixel_size_m", "dtype"}) {
        if (!j.contains(field)) throw FormatError("MBR header missing field '" + std::string(field) + "': " + path);
    }
    if (!j["width"].is_number_integer() || !j["height"].is_number_integer() || !j["bands"].is_number_integer())
        throw FormatError("MBR header field 'width'/'height'/'bands' must be integer: " + path);
    if (j["dtype"] != "f32le") throw FormatError("MBR header field 'dtype' must be \"f32le\": " + path);

    MultibandImage img;
    img.width = j["width"].get<int>();
    img.height = j["height"].get<int>();
    img.bands = j["bands"].get<int>();
    img.pixel_size_m = j["pixel_size_m"].get<double>();
    if (img.width < 1 || img.height < 1) throw FormatError("MBR header field 'width'/'height' out of range: " + path);
    if (img.bands < 1 || img.bands > 16) throw FormatError("MBR header field 'bands' out of range: " + path);
    if (!(img.pixel_size_m > 0)) throw FormatError("MBR header field 'pixel_size_m' must be positive: " + path);

    const std::size_t count = static_cast<std::size_t>(img.bands) * img.pixel_count();
    img.data.resize(count);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(count * 4));
    if (static_cast<std::size_t>(in.gcount()) != count * 4)
        throw FormatError("MBR payload size mismatch in " + path + ": expected " +
                          std::to_string(count * 4) + " bytes, got " + std::to_string(in.gcount()));
    if (in.peek() != std::ifstream::traits_type::eof())
        throw FormatError("MBR payload size mismatch in " + path + ": trailing bytes after declared payload");

    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(img.data[i]))
            throw ValidationError("non-finite sample at index " + std::to_string(i) + " in " + path);
    }
    return img;
}

void save_image(const MultibandImage& image, const std::string& path) {
    image.validate();
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        if (!std::isfinite(image.data[i]))
            throw ValidationError("non-finite sample at index " + std::to_string(i));
    }
    ordered_json j;
    j["width"] = image.width;
    j["height"] = image.height;
    j["bands"] = image.bands;
    j["pixel_size_m"] = image.pixel_size_m;
    j["dtype"] = "f32le";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    const std::string header = j.dump() + "\n";
    write_bytes(out, header.data(), header.size(), path);
    write_bytes(out, image.data.data(), image.data.size() * 4, path);
}

namespace {

std::vector<std::pair<double, double>> parse_ring(const nlohmann::json& ring, std::size_t poly_index) {
    if (!ring.is_array() || ring.size() < 3)
        throw ValidationError("polygon " + std::to_string(poly_index) + " has a ring with < 3 vertices");
    std::vector<std::pair<double, double>> out;
    out.reserve(ring.size());
    for (const auto& v : ring) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw FormatError("polygon " + std::to_string(poly_index) + " has a malformed vertex");
        out.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    return out;
}

}  // namespace

AnnotationSet load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed annotation JSON in " + path + ": " + e.what());
    }
    if (!j.contains("polygons") || !j["polygons"].is_array())
        throw FormatError("annotation JSON missing 'polygons' array: " + path);

    AnnotationSet ann;
    std::size_t index = 0;
    for (const auto& jp : j["polygons"]) {
        Polygon p;
        if (!jp.contains("class") || !jp["class"].is_string())
            throw ValidationError("polygon " + std::to_string(index) + " missing class string");
        p.class_label = class_label_from_name(jp["class"].get<std::string>());
        if (!jp.contains("exterior"))
            throw ValidationError("polygon " + std::to_string(index) + " missing exterior ring");
        p.exterior = parse_ring(jp["exterior"], index);
        if (jp.contains("holes")) {
            for (const auto& h : jp["holes"]) p.holes.push_back(parse_ring(h, index));
        }
        ann.polygons.push_back(std::move(p));
        ++index;
    }
    ann.validate();
    return ann;
}

void save_annotations(const AnnotationSet& ann, const std::string& path) {
    ann.validate();
    ordered_json j;
    j["polygons"] = ordered_json::array();
    for (const Polygon& p : ann.polygons) {
        ordered_json jp;
        jp["class"] = class_label_name(p.class_label);
        ordered_json ext = ordered_json::array();
        for (const auto& [x, y] : p.exterior) ext.push_back({x, y});
        jp["exterior"] = std::move(ext);
        ordered_json holes = ordered_json::array();
        for (const auto& hole : p.holes) {
            ordered_json hr = ordered_json::array();
            for (const auto& [x, y] : hole) hr.push_back({x, y});
            holes.push_back(std::move(hr));
        }
        jp["holes"] = std::move(holes);
        j["polygons"].push_back(std::move(jp));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    const std::string body = j.dump() + "\n";
    write_bytes(out, body.data(), body.size(), path);
}

Mask load_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw FormatError("not a binary PGM (P5) file: " + path);
    int width = 0, height = 0, maxval = 0;
    in >> width >> height >> maxval;
    if (!in || width < 1 || height < 1) throw FormatError("malformed PGM dimensions: " + path);
    if (maxval != 255) throw FormatError("PGM maxval must be 255: " + path);
    in.get();  // single whitespace after maxval

    Mask mask;
    mask.width = width;
    mask.height = height;
    mask.values.resize(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(mask.values.data()), static_cast<std::streamsize>(mask.values.size()));
    if (static_cast<std::size_t>(in.gcount()) != mask.values.size())
        throw FormatError("PGM payload size mismatch: " + path);
    return mask;
}

void save_mask(const Mask& mask, const std::string& path) {
    if (mask.width < 1 || mask.height < 1) throw ValidationError("mask dimensions must be >= 1");
    if (mask.values.size() != static_cast<std::size_t>(mask.width) * mask.height)
        throw ValidationError("mask length does not match width*height");
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
        const std::uint8_t v = mask.values[i];
        if (v != 0 && v != 128 && v != 255)
            throw ValidationError("mask value " + std::to_string(v) + " at index " +
                                  std::to_string(i) + " is outside the palette {0,128,255}");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    const std::string header = "P5\n" + std::to_string(mask.width) + " " +
                               std::to_string(mask.height) + "\n255\n";
    write_bytes(out, header.data(), header.size(), path);
    write_bytes(out, mask.values.data(), mask.values.size(), path);
}

ProbabilityMask load_probability_mask(const std::string& path) {
    MultibandImage img = load_image(path);
    if (img.bands != 1) throw FormatError("probability mask must be a 1-band MBR: " + path);
    ProbabilityMask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.probs = std::move(img.data);
    mask.validate();
    return mask;
}

void save_probability_mask(const ProbabilityMask& mask, const std::string& path) {
    mask.validate();
    MultibandImage img;
    img.width = mask.width;
    img.height = mask.height;
    img.bands = 1;
    img.pixel_size_m = 1.24;
    img.data = mask.probs;
    save_image(img, path);
}

}  // namespace aquifer
