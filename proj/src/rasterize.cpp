#include "aquifer/rasterize.hpp"

#include <algorithm>
#include <cmath>

namespace aquifer {

bool point_in_ring(double x, double y, const std::vector<std::pair<double, double>>& ring) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto [x1, y1] = ring[i];
        const auto [x2, y2] = ring[(i + 1) % n];
        // Half-open in y: the edge spans [min(y1,y2), max(y1,y2)).
        if ((y1 <= y) != (y2 <= y)) {
            const double x_cross = x1 + (y - y1) / (y2 - y1) * (x2 - x1);
            if (x < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool point_in_polygon(double x, double y, const Polygon& polygon) {
    // Even-odd across all rings: an odd total crossing count means inside.
    int parity = point_in_ring(x, y, polygon.exterior) ? 1 : 0;
    for (const auto& hole : polygon.holes) {
        if (point_in_ring(x, y, hole)) parity ^= 1;
    }
    return parity == 1;
}

Mask rasterize_annotations(const AnnotationSet& ann, int width, int height,
                           const std::optional<std::set<ClassLabel>>& class_filter) {
    if (width < 1 || height < 1) throw ValidationError("mask dimensions must be >= 1");
    ann.validate();

    Mask mask;
    mask.width = width;
    mask.height = height;
    mask.values.assign(static_cast<std::size_t>(width) * height, 0);

    for (const Polygon& poly : ann.polygons) {
        if (class_filter && !class_filter->count(poly.class_label)) continue;

        // Clip the scan to the polygon's bounding box.
        double min_x = poly.exterior[0].first, max_x = min_x;
        double min_y = poly.exterior[0].second, max_y = min_y;
        for (const auto& [vx, vy] : poly.exterior) {
            min_x = std::min(min_x, vx);
            max_x = std::max(max_x, vx);
            min_y = std::min(min_y, vy);
            max_y = std::max(max_y, vy);
        }
        const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 1.0)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x)));
        const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 1.0)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y)));

        for (int j = y0; j <= y1; ++j) {
            for (int i = x0; i <= x1; ++i) {
                if (mask.at(i, j) == 255) continue;
                if (point_in_polygon(i + 0.5, j + 0.5, poly)) mask.at(i, j) = 255;
            }
        }
    }
    return mask;
}

}  // namespace aquifer
