#pragma once

#include <optional>
#include <set>

#include "aquifer/raster.hpp"

namespace aquifer {

// Even-odd fill with pixel-center sampling. Edges follow the half-open
// convention: each edge includes its lower-y endpoint and excludes its
// upper-y endpoint, so shared edges are never double counted.
bool point_in_ring(double x, double y, const std::vector<std::pair<double, double>>& ring);

// Holes are subtracted by the same even-odd rule.
bool point_in_polygon(double x, double y, const Polygon& polygon);

// Pixel (i,j) is positive (255) iff its center (i+0.5, j+0.5) lies inside any
// polygon passing the class filter; overlapping polygons union.
Mask rasterize_annotations(const AnnotationSet& ann, int width, int height,
                           const std::optional<std::set<ClassLabel>>& class_filter = std::nullopt);

}  // namespace aquifer
