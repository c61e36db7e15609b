#include <doctest.h>

#include <algorithm>
#include <random>

#include "tiager/detection.hpp"
#include "tiager/serial_ref.hpp"
#include "support/fixtures.hpp"

using namespace tiager;

namespace {

bool same_components(const ComponentSet& a, const ComponentSet& b) {
    if (a.components.size() != b.components.size()) return false;
    if (a.labels != b.labels) return false; // both are canonically ordered
    for (size_t i = 0; i < a.components.size(); ++i) {
        const auto& x = a.components[i];
        const auto& y = b.components[i];
        if (x.area != y.area || x.min_x != y.min_x || x.min_y != y.min_y ||
            x.max_x != y.max_x || x.max_y != y.max_y)
            return false;
        if (std::abs(x.centroid_x - y.centroid_x) > 1e-9) return false;
        if (std::abs(x.centroid_y - y.centroid_y) > 1e-9) return false;
    }
    return true;
}

std::vector<Detection> random_detections(int n, std::mt19937& rng,
                                         double extent_um = 400.0) {
    std::uniform_real_distribution<double> pos(0, extent_um), conf(0, 1);
    std::vector<Detection> d(n);
    for (auto& det : d) det = {pos(rng), pos(rng), conf(rng)};
    return d;
}

} // namespace

TEST_CASE("connected components basics") {
    Raster empty(8, 8, DET_LEVEL, 0.0, RasterKind::Mask);
    CHECK(connected_components(empty).components.empty());

    Raster one(8, 8, DET_LEVEL, 0.0, RasterKind::Mask);
    one.at(3, 4) = 1.0;
    const ComponentSet cs = connected_components(one);
    REQUIRE(cs.components.size() == 1);
    CHECK(cs.components[0].area == 1);
    CHECK(cs.components[0].centroid_x == 3.0);
    CHECK(cs.components[0].centroid_y == 4.0);
    CHECK(cs.labels[4 * 8 + 3] == 0);
    CHECK(cs.labels[0] == -1);
}

TEST_CASE("connectivity 4 vs 8 on a diagonal pair") {
    Raster m(4, 4, DET_LEVEL, 0.0, RasterKind::Mask);
    m.at(1, 1) = 1.0;
    m.at(2, 2) = 1.0;
    CHECK(connected_components(m, 8).components.size() == 1);
    CHECK(connected_components(m, 4).components.size() == 2);
    CHECK_THROWS_AS(connected_components(m, 6), InvalidInputError);
}

TEST_CASE("connected components match flood-fill reference") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 12; ++trial) {
        const Raster m = test::random_mask(128, 128, rng, 0.35 + 0.05 * (trial % 5));
        for (int conn : {4, 8})
            CHECK(same_components(connected_components(m, conn),
                                  serial::connected_components(m, conn)));
    }
}

TEST_CASE("components to detections") {
    Raster m(16, 16, DET_LEVEL, 0.0, RasterKind::Mask);
    Raster prob(16, 16, DET_LEVEL);
    // 2x2 blob with mixed probabilities
    for (int y = 2; y < 4; ++y)
        for (int x = 4; x < 6; ++x) m.at(x, y) = 1.0;
    prob.at(4, 2) = 0.6;
    prob.at(5, 2) = 0.8;
    prob.at(4, 3) = 1.0;
    prob.at(5, 3) = 0.6;
    // single pixel to be dropped by the area filter
    m.at(12, 12) = 1.0;
    prob.at(12, 12) = 0.9;

    const auto cs = connected_components(m);
    const auto dets = components_to_detections(cs, prob, 2);
    REQUIRE(dets.size() == 1);
    // centroid (4.5, 2.5) at 0.5 mpp -> pixel-center microns
    CHECK(dets[0].x_um == doctest::Approx((4.5 + 0.5) * 0.5));
    CHECK(dets[0].y_um == doctest::Approx((2.5 + 0.5) * 0.5));
    CHECK(dets[0].confidence == doctest::Approx(0.75));

    CHECK(components_to_detections(cs, prob, 1).size() == 2);
}

TEST_CASE("nms basics") {
    // two points 5 um apart, radius 8: keep the more confident one
    std::vector<Detection> d{{10, 10, 0.4}, {15, 10, 0.9}};
    auto kept = nms(d, 8.0);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].confidence == 0.9);

    // exactly at the radius: both survive (strict interior suppression)
    std::vector<Detection> far{{0, 0, 0.5}, {8.0001, 0, 0.4}};
    CHECK(nms(far, 8.0).size() == 2);

    // equal confidence: (y, x) ascending wins
    std::vector<Detection> tie{{5, 5, 0.7}, {5, 4, 0.7}};
    auto t = nms(tie, 8.0);
    REQUIRE(t.size() == 1);
    CHECK(t[0].y_um == 4.0);

    CHECK(nms({}, 8.0).empty());
    CHECK_THROWS_AS(nms(d, -1.0), InvalidInputError);
}

TEST_CASE("nms invariants and reference agreement") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        auto dets = random_detections(500, rng);
        const double radius = 4.0 + trial;
        const auto kept = nms(dets, radius);
        const auto ref = serial::nms(dets, radius);
        CHECK(kept == ref);

        // kept set is an independent set at the radius
        for (size_t i = 0; i < kept.size(); ++i)
            for (size_t j = i + 1; j < kept.size(); ++j) {
                const double dx = kept[i].x_um - kept[j].x_um;
                const double dy = kept[i].y_um - kept[j].y_um;
                CHECK(dx * dx + dy * dy > radius * radius);
            }

        // idempotent
        CHECK(nms(kept, radius) == kept);

        // every suppressed detection has a kept neighbor within the radius
        for (const auto& d : dets) {
            if (std::find(kept.begin(), kept.end(), d) != kept.end()) continue;
            bool near = false;
            for (const auto& k : kept) {
                const double dx = d.x_um - k.x_um, dy = d.y_um - k.y_um;
                if (dx * dx + dy * dy <= radius * radius) near = true;
            }
            CHECK(near);
        }

        // input order must not matter
        std::shuffle(dets.begin(), dets.end(), rng);
        CHECK(nms(dets, radius) == kept);
    }
}

TEST_CASE("dilate gt points") {
    CHECK(dilate_gt_points({}, 3, 32, 32).popcount() == 0);

    const Raster one = dilate_gt_points({{16, 16}}, 3, 32, 32);
    CHECK(one.popcount() == 29); // discrete radius-3 disk

    // overlapping disks form a union, not a sum
    const Raster two = dilate_gt_points({{16, 16}, {17, 16}}, 3, 32, 32);
    CHECK(two.popcount() < 2 * 29);
    CHECK(two.is_binary());

    CHECK_THROWS_AS(dilate_gt_points({{40, 2}}, 3, 32, 32), InvalidInputError);
}

TEST_CASE("dilate gt points equals dilation of a point mask") {
    std::mt19937 rng(53);
    std::uniform_int_distribution<int> pos(0, 63);
    std::vector<std::pair<int, int>> pts;
    Raster point_mask(64, 64, DET_LEVEL, 0.0, RasterKind::Mask);
    for (int i = 0; i < 20; ++i) {
        const int x = pos(rng), y = pos(rng);
        pts.emplace_back(x, y);
        point_mask.at(x, y) = 1.0;
    }
    CHECK(dilate_gt_points(pts, 3, 64, 64) == morph(point_mask, MorphOp::Dilate, 3));
}
