#include <doctest.h>

#include <algorithm>
#include <random>

#include "tiager/serial_ref.hpp"
#include "tiager/tiling.hpp"
#include "support/fixtures.hpp"

using namespace tiager;

namespace {

std::vector<long> xs_of(const TilePlan& p) {
    std::vector<long> xs;
    for (const auto& c : p.coords)
        if (c.y == p.coords.front().y) xs.push_back(c.x);
    return xs;
}

} // namespace

TEST_CASE("plan covers 1024 canvas with clamped tail") {
    const TilePlan p = plan_tiles(1024, 1024, 128, 100, 0);
    const std::vector<long> want{0, 100, 200, 300, 400, 500, 600, 700, 800, 896};
    CHECK(xs_of(p) == want);
    CHECK(p.coords.size() == want.size() * want.size());
    for (const auto& c : p.coords) {
        CHECK(c.w == 128);
        CHECK(c.x + c.w <= 1024);
    }
}

TEST_CASE("plan with padding") {
    const TilePlan p = plan_tiles(1000, 600, 512, 256, 128);
    CHECK(p.canvas_w == 1256);
    CHECK(p.canvas_h == 856);
    const std::vector<long> want_x{0, 256, 512, 744};
    CHECK(xs_of(p) == want_x);
    std::vector<long> ys;
    for (const auto& c : p.coords)
        if (c.x == 0) ys.push_back(c.y);
    CHECK(ys == std::vector<long>{0, 256, 344});
}

TEST_CASE("plan edge cases") {
    // patch larger than the canvas: one tile at the origin
    const TilePlan tiny = plan_tiles(50, 40, 128, 100, 0);
    CHECK(tiny.coords.size() == 1);
    CHECK(tiny.coords[0] == TileCoord{0, 0, 128, 128});

    // exact fit: no clamped duplicate
    const TilePlan exact = plan_tiles(256, 256, 128, 128, 0);
    CHECK(exact.coords.size() == 4);

    CHECK_THROWS_AS(plan_tiles(512, 512, 128, 129, 0), CoverageViolationError);
    CHECK_THROWS_AS(plan_tiles(512, 512, 0, 0, 0), InvalidInputError);
}

TEST_CASE("plan coverage property") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<long> dim(30, 700);
    std::uniform_int_distribution<int> ps(8, 200);
    for (int trial = 0; trial < 30; ++trial) {
        const long w = dim(rng), h = dim(rng);
        const int patch = ps(rng);
        const int stride = 1 + std::uniform_int_distribution<int>(0, patch - 1)(rng);
        const int pad = std::uniform_int_distribution<int>(0, 64)(rng);
        const TilePlan p = plan_tiles(w, h, patch, stride, pad);
        std::vector<char> hit(static_cast<size_t>(w) * h, 0);
        // an oversized patch overhangs the canvas from position 0
        const long bound_x = std::max<long>(p.canvas_w, patch);
        const long bound_y = std::max<long>(p.canvas_h, patch);
        for (const auto& c : p.coords) {
            CHECK(c.x >= 0);
            CHECK(c.x + c.w <= bound_x);
            CHECK(c.y + c.h <= bound_y);
            for (long y = c.y; y < c.y + c.h; ++y)
                for (long x = c.x; x < c.x + c.w; ++x) {
                    const long ux = x - pad, uy = y - pad;
                    if (ux >= 0 && uy >= 0 && ux < w && uy < h)
                        hit[static_cast<size_t>(uy) * w + ux] = 1;
                }
        }
        CHECK(std::count(hit.begin(), hit.end(), 0) == 0);
        CHECK(std::is_sorted(p.coords.begin(), p.coords.end(),
                             [](const TileCoord& a, const TileCoord& b) {
                                 return std::tie(a.y, a.x) < std::tie(b.y, b.x);
                             }));
    }
}

TEST_CASE("extract patch") {
    Raster r(64, 64, SEG_LEVEL, 0.25);
    const int pad = 16;
    // fully interior window reads the constant
    const Raster inner = extract_patch(r, {pad + 10, pad + 12, 8, 8}, pad);
    for (double v : inner.pixels()) CHECK(v == 0.25);
    CHECK(inner.origin_x() == doctest::Approx(10.0));
    CHECK(inner.origin_y() == doctest::Approx(12.0));

    // fully in the pad border: zeros
    const Raster border = extract_patch(r, {0, 0, 8, 8}, pad);
    for (double v : border.pixels()) CHECK(v == 0.0);

    // straddling corner agrees with the guarded read
    const Raster corner = extract_patch(r, {12, 12, 16, 16}, pad);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            CHECK(corner.at(x, y) == r.get(12 + x - pad, 12 + y - pad));
}

TEST_CASE("stitch basics") {
    const TilePlan p = plan_tiles(8, 4, 4, 4, 0);
    std::vector<std::pair<TileCoord, Raster>> patches;
    for (const auto& c : p.coords)
        patches.emplace_back(c, Raster(4, 4, SEG_LEVEL, 0.75));
    const Raster out = stitch(patches, p);
    CHECK(out.width() == 8);
    for (double v : out.pixels()) CHECK(v == 0.75); // exact, not approx
}

TEST_CASE("stitch averages overlap") {
    TilePlan p = plan_tiles(6, 4, 4, 2, 0);
    std::vector<std::pair<TileCoord, Raster>> patches;
    std::vector<double> fill{0.2, 0.6};
    size_t i = 0;
    for (const auto& c : p.coords)
        patches.emplace_back(c, Raster(4, 4, SEG_LEVEL, fill[i++ % 2]));
    const Raster avg = stitch(patches, p, StitchMode::Average);
    // columns [2,4) are covered by both tiles in each row
    CHECK(avg.at(2, 0) == doctest::Approx(0.4).epsilon(1e-12));
    const Raster mx = stitch(patches, p, StitchMode::Max);
    CHECK(mx.at(2, 0) == 0.6);
    CHECK(mx.at(0, 0) == 0.2);
}

TEST_CASE("stitch matches dense reference and ignores list order") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uni(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const long w = 80 + trial * 7, h = 60 + trial * 5;
        const TilePlan p = plan_tiles(w, h, 32, 20, trial % 2 ? 8 : 0);
        std::vector<std::pair<TileCoord, Raster>> patches;
        for (const auto& c : p.coords) {
            Raster r(c.w, c.h, SEG_LEVEL);
            for (double& v : r.pixels()) v = uni(rng);
            patches.emplace_back(c, r);
        }
        const StitchMode mode = trial % 2 ? StitchMode::Max : StitchMode::Average;
        const Raster fast = stitch(patches, p, mode);
        const Raster ref = serial::stitch(patches, p, mode);
        REQUIRE(fast.width() == ref.width());
        for (size_t i = 0; i < fast.size(); ++i)
            CHECK(fast.pixels()[i] == doctest::Approx(ref.pixels()[i]).epsilon(1e-9));

        auto shuffled = patches;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(stitch(shuffled, p, mode) == fast); // bit-identical
    }
}

TEST_CASE("stitch validates the patch set") {
    const TilePlan p = plan_tiles(8, 8, 4, 4, 0);
    std::vector<std::pair<TileCoord, Raster>> patches;
    for (const auto& c : p.coords)
        patches.emplace_back(c, Raster(4, 4, SEG_LEVEL, 1.0));

    auto missing = patches;
    missing.pop_back();
    CHECK_THROWS_AS(stitch(missing, p), IncompleteCoverageError);

    auto dup = patches;
    dup.push_back(patches.front());
    CHECK_THROWS_AS(stitch(dup, p), InvalidInputError);

    auto rogue = patches;
    rogue.back().first.x += 1; // a planned window is now unaccounted for
    CHECK_THROWS_AS(stitch(rogue, p), IncompleteCoverageError);
}

TEST_CASE("extract/stitch round trip is exact") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> uni(0, 1);
    for (int trial = 0; trial < 8; ++trial) {
        Raster src(90 + trial, 70 + trial, DET_LEVEL);
        for (double& v : src.pixels()) v = uni(rng);
        const TilePlan p = plan_tiles(src.width(), src.height(), 32,
                                      trial % 2 ? 24 : 32, trial % 3 == 0 ? 16 : 0);
        std::vector<std::pair<TileCoord, Raster>> patches;
        for (const auto& c : p.coords)
            patches.emplace_back(c, extract_patch(src, c, p.pad));
        const Raster back = stitch(patches, p);
        REQUIRE(back.width() == src.width());
        for (size_t i = 0; i < src.size(); ++i)
            CHECK(back.pixels()[i] == src.pixels()[i]); // bit-exact
    }
}

TEST_CASE("stitch places central crops centered") {
    const TilePlan p = plan_tiles(512, 512, 512, 256, 128);
    // one full-size patch per planned window is required; cropped patches
    // centered in their window must tile the unpadded canvas exactly
    std::vector<std::pair<TileCoord, Raster>> patches;
    double tag = 0.1;
    for (const auto& c : p.coords) {
        patches.emplace_back(c, Raster(256, 256, SEG_LEVEL, tag));
        tag += 0.2;
    }
    const Raster out = stitch(patches, p);
    CHECK(out.at(0, 0) == 0.1);
    CHECK(out.at(511, 0) == doctest::Approx(0.3));
    CHECK(out.at(0, 511) == doctest::Approx(0.5));
    CHECK(out.at(511, 511) == doctest::Approx(0.7));
}
