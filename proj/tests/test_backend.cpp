#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "tiager/backend.hpp"
#include "support/fixtures.hpp"

using namespace tiager;
namespace fs = std::filesystem;

namespace {

// Emits constant class probabilities and counts its invocations.
class ConstBackend : public SegmentationBackend {
public:
    ConstBackend(BackendFlavor flavor, int patch, Resolution res,
                 std::vector<double> values)
        : flavor_(flavor), patch_(patch), res_(res), values_(std::move(values)) {}
    BackendFlavor flavor() const override { return flavor_; }
    int patch_size() const override { return patch_; }
    Resolution input_resolution() const override { return res_; }
    bool thread_safe() const override { return true; }
    std::vector<Raster> infer(const Raster& patch) const override {
        ++calls;
        std::vector<Raster> out;
        for (double v : values_) {
            Raster r(patch.width(), patch.height(), res_, v);
            r.set_origin(patch.origin_x(), patch.origin_y());
            out.push_back(std::move(r));
        }
        return out;
    }
    mutable std::atomic<long> calls{0};

private:
    BackendFlavor flavor_;
    int patch_;
    Resolution res_;
    std::vector<double> values_;
};

PipelineConfig small_config() {
    PipelineConfig cfg;
    cfg.seg.patch = 64;
    cfg.seg.stride = 32;
    cfg.seg.pad = 16;
    cfg.det.tile = 128;
    cfg.det.patch = 32;
    cfg.det.stride = 24;
    return cfg;
}

} // namespace

TEST_CASE("ensemble average") {
    Raster a(4, 4, SEG_LEVEL, 0.2);
    Raster b(4, 4, SEG_LEVEL, 0.6);
    const Raster avg = ensemble_average({a, b});
    for (double v : avg.pixels()) CHECK(v == doctest::Approx(0.4).epsilon(1e-15));

    CHECK(ensemble_average({a}) == a);
    CHECK_THROWS_AS(ensemble_average({}), InvalidInputError);
    CHECK_THROWS_AS(ensemble_average({a, Raster(3, 3, SEG_LEVEL)}), InvalidInputError);
}

TEST_CASE("ensemble average is order and duplication independent bit-exactly") {
    std::mt19937 rng(131);
    std::uniform_real_distribution<double> uni(0, 1);
    std::vector<Raster> members;
    for (int i = 0; i < 5; ++i) {
        Raster r(16, 16, SEG_LEVEL);
        for (double& v : r.pixels()) v = uni(rng);
        members.push_back(std::move(r));
    }
    const Raster base = ensemble_average(members);

    auto shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(ensemble_average(shuffled) == base);

    // k copies of each member leave the mean unchanged, bit for bit
    std::vector<Raster> doubled;
    for (const auto& m : members) { doubled.push_back(m); doubled.push_back(m); }
    CHECK(ensemble_average(doubled) == base);

    // a single-member ensemble of k identical rasters returns the member
    CHECK(ensemble_average({members[0], members[0], members[0]}) == members[0]);
}

TEST_CASE("threshold") {
    Raster p(4, 1, SEG_LEVEL);
    p.at(0, 0) = 0.2;
    p.at(1, 0) = 0.5;
    p.at(2, 0) = 0.50000001;
    p.at(3, 0) = 0.9;
    const Raster m = threshold(p, 0.5);
    CHECK(m.kind() == RasterKind::Mask);
    CHECK(m.at(0, 0) == 0.0);
    CHECK(m.at(1, 0) == 1.0); // threshold is inclusive
    CHECK(m.at(2, 0) == 1.0);
    CHECK(m.at(3, 0) == 1.0);
    CHECK_THROWS_AS(threshold(p, 1.5), InvalidInputError);
    CHECK_THROWS_AS(threshold(p, -0.1), InvalidInputError);
}

TEST_CASE("run_segmentation with a constant backend") {
    const PipelineConfig cfg = small_config();
    Raster base(400, 300, DET_LEVEL, 0.5);
    MemorySource wsi(std::move(base));

    auto be = std::make_shared<ConstBackend>(
        BackendFlavor::Segmentation, cfg.seg.patch, SEG_LEVEL,
        std::vector<double>{0.7, 0.2, 0.1});
    Ensemble ens{{be}};
    const SegMasks masks = run_segmentation(wsi, ens, cfg);
    CHECK(masks.tumour.width() == 200); // SEG_LEVEL canvas
    CHECK(masks.tumour.height() == 150);
    // tumour prob 0.7 everywhere -> the full canvas, minus the corner
    // rounding the opening applies at the raster border
    const Raster full(200, 150, SEG_LEVEL, 1.0, RasterKind::Mask);
    CHECK(masks.tumour == morph(full, MorphOp::Open, cfg.seg.open_radius_px));
    CHECK(masks.stroma.popcount() == 0); // 0.2 < 0.5
    CHECK(be->calls > 0);
}

TEST_CASE("segmentation recovers a passthrough disk exactly") {
    PipelineConfig cfg = small_config();
    cfg.seg.open_radius_px = 0; // keep the shape untouched
    const int W = 256, H = 192;
    auto tumour = std::make_shared<Raster>(W, H, SEG_LEVEL, 0.0, RasterKind::Mask);
    auto stroma = std::make_shared<Raster>(W, H, SEG_LEVEL, 0.0, RasterKind::Mask);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (std::hypot(x - 128.0, y - 96.0) <= 50) tumour->at(x, y) = 1.0;
            else if (x < 40) stroma->at(x, y) = 1.0;
        }
    MemorySource wsi(Raster(2 * W, 2 * H, DET_LEVEL, 0.9));
    Ensemble ens{{std::make_shared<PassthroughBackend>(tumour, stroma, cfg.seg.patch)}};
    const SegMasks masks = run_segmentation(wsi, ens, cfg);
    CHECK(masks.tumour == *tumour);
    CHECK(masks.stroma == *stroma);
}

TEST_CASE("segmentation schedule independence") {
    const int W = 300, H = 260;
    std::mt19937 rng(139);
    auto tumour = std::make_shared<Raster>(test::random_blob_mask(W, H, rng, 6));
    auto stroma = std::make_shared<Raster>(test::random_blob_mask(W, H, rng, 6));
    MemorySource wsi(Raster(2 * W, 2 * H, DET_LEVEL, 0.9));
    PipelineConfig cfg = small_config();
    Ensemble ens{{std::make_shared<PassthroughBackend>(tumour, stroma, cfg.seg.patch)}};

    cfg.workers = 1;
    const SegMasks serial = run_segmentation(wsi, ens, cfg);
    cfg.workers = 4;
    const SegMasks parallel = run_segmentation(wsi, ens, cfg);
    CHECK(serial.tumour == parallel.tumour); // bit-identical
    CHECK(serial.stroma == parallel.stroma);
}

TEST_CASE("run_detection stitches a passthrough mask back together") {
    PipelineConfig cfg = small_config();
    const int W = 320, H = 256; // DET_LEVEL canvas
    std::mt19937 rng(149);
    auto til = std::make_shared<Raster>(W, H, DET_LEVEL, 0.0, RasterKind::Mask);
    std::uniform_int_distribution<int> px(5, W - 6), py(5, H - 6);
    std::vector<std::pair<int, int>> pts;
    for (int i = 0; i < 25; ++i) pts.emplace_back(px(rng), py(rng));
    *til = dilate_gt_points(pts, 3, W, H);

    MemorySource wsi(Raster(W, H, DET_LEVEL, 0.9));
    Ensemble ens{{std::make_shared<PassthroughBackend>(til, cfg.det.patch)}};
    const Raster prob = run_detection(wsi, ens, cfg);
    REQUIRE(prob.width() == W);
    REQUIRE(prob.height() == H);
    // averaged copies of the same mask reproduce it exactly
    CHECK(threshold(prob, 0.5) == *til);
    for (size_t i = 0; i < prob.size(); ++i)
        CHECK(prob.pixels()[i] == til->pixels()[i]);
}

TEST_CASE("empty roi skips every backend call") {
    const PipelineConfig cfg = small_config();
    MemorySource wsi(Raster(400, 300, DET_LEVEL, 0.5));
    auto be = std::make_shared<ConstBackend>(BackendFlavor::Detection, cfg.det.patch,
                                             DET_LEVEL, std::vector<double>{0.9});
    Ensemble ens{{be}};
    Raster roi(400, 300, DET_LEVEL, 0.0, RasterKind::Mask);
    const Raster prob = run_detection(wsi, ens, cfg, &roi);
    CHECK(be->calls == 0);
    CHECK(prob.popcount() == 0);

    // a single set roi pixel forces only the intersecting tiles to run
    roi.at(10, 10) = 1.0;
    const Raster prob2 = run_detection(wsi, ens, cfg, &roi);
    CHECK(be->calls > 0);
    const long after_one = be->calls;
    Raster full(400, 300, DET_LEVEL, 1.0, RasterKind::Mask);
    run_detection(wsi, ens, cfg, &full);
    CHECK(be->calls - after_one > after_one); // full roi costs strictly more
}

TEST_CASE("luminance backend bands a two-region slide") {
    PipelineConfig cfg = small_config();
    cfg.backend = BackendKind::Luminance;
    const int W = 256, H = 128; // SEG_LEVEL extent
    Raster base(2 * W, 2 * H, DET_LEVEL, 0.95);
    for (int y = 0; y < 2 * H; ++y)
        for (int x = 0; x < 2 * W; ++x) {
            if (x < W) base.at(x, y) = 0.3;       // dark: tumour
            else if (x < W + W / 2) base.at(x, y) = 0.6; // mid: stroma
        }
    MemorySource wsi(std::move(base));
    const SegMasks masks = run_segmentation(wsi, make_seg_ensemble(cfg, nullptr), cfg);
    // sample away from the opening-eroded region borders
    CHECK(masks.tumour.at(64, 64) == 1.0);
    CHECK(masks.tumour.at(192, 64) == 0.0);
    CHECK(masks.stroma.at(160, 64) == 1.0);
    CHECK(masks.stroma.at(64, 64) == 0.0);
    CHECK(masks.stroma.at(240, 64) == 0.0); // light background
}

TEST_CASE("external backend round trip through a subprocess") {
    const fs::path dir = fs::temp_directory_path() / "tiager_ext_test";
    fs::create_directories(dir);
    const fs::path script = dir / "echo_backend.py";
    {
        std::ofstream out(script);
        // reads one framed float32 patch, answers with k=1 payload 1-x
        out << "import struct, sys\n"
               "r, w = sys.stdin.buffer, sys.stdout.buffer\n"
               "while True:\n"
               "    head = r.read(4)\n"
               "    if len(head) < 4:\n"
               "        break\n"
               "    n = struct.unpack('<I', head)[0]\n"
               "    data = r.read(n)\n"
               "    vals = struct.unpack('<%df' % (n // 4), data)\n"
               "    inv = struct.pack('<%df' % len(vals), *[1.0 - v for v in vals])\n"
               "    w.write(struct.pack('<I', len(inv)))\n"
               "    w.write(inv)\n"
               "    w.flush()\n";
    }
    ExternalBackend be("python3 " + script.string(), BackendFlavor::Detection, 16,
                       DET_LEVEL);
    Raster patch(16, 16, DET_LEVEL, 0.25);
    patch.set_origin(3, 7);
    const auto out = be.infer(patch);
    REQUIRE(out.size() == 1);
    CHECK(out[0].width() == 16);
    CHECK(out[0].origin_x() == 3.0);
    for (double v : out[0].pixels()) CHECK(v == doctest::Approx(0.75).epsilon(1e-6));
    // second request over the same pipe
    const auto again = be.infer(patch);
    REQUIRE(again.size() == 1);
    CHECK(again[0].at(0, 0) == doctest::Approx(0.75).epsilon(1e-6));

    ExternalBackend dead("false", BackendFlavor::Detection, 16, DET_LEVEL);
    CHECK_THROWS_AS(dead.infer(patch), BackendError);
    fs::remove_all(dir);
}

TEST_CASE("ensemble validation") {
    auto seg = std::make_shared<ConstBackend>(BackendFlavor::Segmentation, 64,
                                              SEG_LEVEL, std::vector<double>{1, 0, 0});
    auto det = std::make_shared<ConstBackend>(BackendFlavor::Detection, 64, DET_LEVEL,
                                              std::vector<double>{1});
    Ensemble mixed{{seg, det}};
    CHECK_THROWS_AS(mixed.validate(), InvalidInputError);
    Ensemble empty;
    CHECK_THROWS_AS(empty.validate(), InvalidInputError);
    Ensemble ok{{seg, seg}};
    CHECK_NOTHROW(ok.validate());
}
