#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aquifer/rasterize.hpp"
#include "aquifer/rng.hpp"

using namespace aquifer;

namespace {

Polygon square(double x0, double y0, double x1, double y1,
               ClassLabel label = ClassLabel::UnclassifiedBuilding) {
    Polygon p;
    p.class_label = label;
    p.exterior = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    return p;
}

// Independent even-odd oracle (angle-free crossing counter written against
// the half-open edge convention, structured differently from the library).
bool oracle_in_ring(double px, double py, const std::vector<std::pair<double, double>>& ring) {
    int crossings = 0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        double ax = ring[i].first, ay = ring[i].second;
        double bx = ring[(i + 1) % n].first, by = ring[(i + 1) % n].second;
        if (ay > by) {
            std::swap(ax, bx);
            std::swap(ay, by);
        }
        if (!(ay <= py && py < by)) continue;
        // ray toward +x
        const double cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
        if ((by > ay && cross > 0)) ++crossings;
    }
    return crossings % 2 == 1;
}

bool oracle_in_polygon(double px, double py, const Polygon& poly) {
    bool inside = oracle_in_ring(px, py, poly.exterior);
    for (const auto& hole : poly.holes)
        if (oracle_in_ring(px, py, hole)) inside = !inside;
    return inside;
}

Mask oracle_rasterize(const AnnotationSet& ann, int w, int h) {
    Mask m;
    m.width = w;
    m.height = h;
    m.values.assign(static_cast<std::size_t>(w) * h, 0);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i)
            for (const Polygon& p : ann.polygons)
                if (oracle_in_polygon(i + 0.5, j + 0.5, p)) m.at(i, j) = 255;
    return m;
}

Polygon random_polygon(Rng& rng, double extent) {
    // star-shaped polygon around a random center, always simple
    const int verts = 3 + static_cast<int>(rng.next_below(6));
    const double cx = rng.next_uniform(0, extent), cy = rng.next_uniform(0, extent);
    Polygon p;
    for (int i = 0; i < verts; ++i) {
        const double angle = 2.0 * M_PI * (i + rng.next_uniform(0.0, 0.6)) / verts;
        const double r = rng.next_uniform(0.5, extent / 3.0);
        p.exterior.emplace_back(cx + r * std::cos(angle), cy + r * std::sin(angle));
    }
    return p;
}

}  // namespace

TEST_CASE("point_in_polygon basic square") {
    const Polygon sq = square(0, 0, 4, 4);
    CHECK(point_in_polygon(2, 2, sq));
    CHECK_FALSE(point_in_polygon(5, 5, sq));
}

TEST_CASE("hole excludes interior point under even-odd") {
    Polygon sq = square(0, 0, 4, 4);
    sq.holes.push_back({{1, 1}, {3, 1}, {3, 3}, {1, 3}});
    CHECK_FALSE(point_in_polygon(2, 2, sq));
    CHECK(point_in_polygon(0.5, 0.5, sq));
}

TEST_CASE("unit square covering 16 pixel centers") {
    AnnotationSet ann;
    ann.polygons.push_back(square(0, 0, 4, 4));
    const Mask m = rasterize_annotations(ann, 8, 8);
    int positives = 0;
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i)
            if (m.at(i, j)) {
                ++positives;
                CHECK(i < 4);
                CHECK(j < 4);
            }
    CHECK(positives == 16);
    CHECK(m.values == oracle_rasterize(ann, 8, 8).values);
}

TEST_CASE("empty annotation set rasterizes to all zeros") {
    const Mask m = rasterize_annotations(AnnotationSet{}, 5, 5);
    for (auto v : m.values) CHECK(v == 0);
}

TEST_CASE("two disjoint unit squares mark exactly two pixels") {
    AnnotationSet ann;
    ann.polygons.push_back(square(0, 0, 1, 1));
    ann.polygons.push_back(square(3, 3, 4, 4));
    const Mask m = rasterize_annotations(ann, 6, 6);
    int positives = 0;
    for (auto v : m.values) positives += v ? 1 : 0;
    CHECK(positives == 2);
    CHECK(m.at(0, 0) == 255);
    CHECK(m.at(3, 3) == 255);
}

TEST_CASE("degenerate zero-area polygon rasterizes to nothing") {
    AnnotationSet ann;
    Polygon sliver;
    sliver.exterior = {{1, 1}, {3, 1}, {2, 1}};
    ann.polygons.push_back(sliver);
    const Mask m = rasterize_annotations(ann, 5, 5);
    for (auto v : m.values) CHECK(v == 0);
}

TEST_CASE("class filter selects matching polygons only") {
    AnnotationSet ann;
    ann.polygons.push_back(square(0, 0, 1, 1, ClassLabel::Residential));
    ann.polygons.push_back(square(3, 3, 4, 4, ClassLabel::NonResidential));
    const Mask m = rasterize_annotations(ann, 6, 6, std::set<ClassLabel>{ClassLabel::Residential});
    CHECK(m.at(0, 0) == 255);
    CHECK(m.at(3, 3) == 0);
}

TEST_CASE("rasterization equals the exhaustive center oracle on random scenes") {
    Rng rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = 4 + static_cast<int>(rng.next_below(12));
        const int h = 4 + static_cast<int>(rng.next_below(12));
        AnnotationSet ann;
        const int n_polys = static_cast<int>(rng.next_below(4));
        for (int p = 0; p < n_polys; ++p) ann.polygons.push_back(random_polygon(rng, std::min(w, h)));
        if (ann.polygons.empty()) continue;
        const Mask actual = rasterize_annotations(ann, w, h);
        const Mask expected = oracle_rasterize(ann, w, h);
        CHECK(actual.values == expected.values);
    }
}

TEST_CASE("adding a polygon never turns a positive pixel negative") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        AnnotationSet ann;
        ann.polygons.push_back(random_polygon(rng, 10));
        const Mask before = rasterize_annotations(ann, 12, 12);
        ann.polygons.push_back(random_polygon(rng, 10));
        const Mask after = rasterize_annotations(ann, 12, 12);
        for (std::size_t i = 0; i < before.values.size(); ++i) {
            if (before.values[i]) CHECK(after.values[i] == 255);
        }
    }
}

TEST_CASE("integer translation shifts the positive region") {
    AnnotationSet ann;
    ann.polygons.push_back(square(1, 1, 4, 3));
    const Mask base = rasterize_annotations(ann, 16, 16);

    const int dx = 3, dy = 5;
    AnnotationSet shifted;
    Polygon moved = ann.polygons[0];
    for (auto& [x, y] : moved.exterior) {
        x += dx;
        y += dy;
    }
    shifted.polygons.push_back(moved);
    const Mask shifted_mask = rasterize_annotations(shifted, 16, 16);

    for (int j = 0; j + dy < 16; ++j)
        for (int i = 0; i + dx < 16; ++i)
            CHECK(base.at(i, j) == shifted_mask.at(i + dx, j + dy));
}
