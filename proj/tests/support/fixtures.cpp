#include "support/fixtures.hpp"

#include <filesystem>

#include "tiager/io.hpp"
#include "tiager/png_io.hpp"

namespace tiager::test {

namespace fs = std::filesystem;

Raster random_mask(int w, int h, std::mt19937& rng, double density,
                   Resolution res) {
    Raster m(w, h, res, 0.0, RasterKind::Mask);
    std::bernoulli_distribution bit(density);
    for (double& v : m.pixels()) v = bit(rng) ? 1.0 : 0.0;
    return m;
}

Raster random_blob_mask(int w, int h, std::mt19937& rng, int blobs) {
    Raster m(w, h, SEG_LEVEL, 0.0, RasterKind::Mask);
    std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1);
    std::uniform_int_distribution<int> sz(3, std::max(4, w / 4));
    std::bernoulli_distribution disk(0.5);
    for (int b = 0; b < blobs; ++b) {
        const int cx = px(rng), cy = py(rng), s = sz(rng);
        if (disk(rng)) {
            for (int y = std::max(0, cy - s); y <= std::min(h - 1, cy + s); ++y)
                for (int x = std::max(0, cx - s); x <= std::min(w - 1, cx + s); ++x)
                    if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= s * s)
                        m.at(x, y) = 1.0;
        } else {
            for (int y = cy; y <= std::min(h - 1, cy + s); ++y)
                for (int x = cx; x <= std::min(w - 1, cx + s); ++x)
                    m.at(x, y) = 1.0;
        }
    }
    return m;
}

void write_tiles(const Raster& level_img, int level, const std::string& tile_dir,
                 int tile_size) {
    fs::create_directories(tile_dir);
    const int cols = (level_img.width() + tile_size - 1) / tile_size;
    const int rows = (level_img.height() + tile_size - 1) / tile_size;
    for (int row = 0; row < rows; ++row)
        for (int col = 0; col < cols; ++col) {
            const int w = std::min(tile_size, level_img.width() - col * tile_size);
            const int h = std::min(tile_size, level_img.height() - row * tile_size);
            Raster tile(w, h, level_img.resolution());
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    tile.at(x, y) = level_img.at(col * tile_size + x,
                                                 row * tile_size + y);
            const std::string name = "L" + std::to_string(level) + "_X" +
                                     std::to_string(col) + "_Y" +
                                     std::to_string(row) + ".png";
            write_png_gray(tile, (fs::path(tile_dir) / name).string());
        }
}

namespace {

FixtureInfo build_slide(const std::string& dir, bool with_tissue, long n_tils) {
    // Base level (20x): 3600x3600 px; level 1 (10x): 1800x1800 px.
    const int W20 = 3600, H20 = 3600;
    const int W10 = 1800, H10 = 1800;
    fs::create_directories(dir);

    // Geometry at 10x: tumour frame [200,1600)^2 with a [400,1400)^2 hole
    // holding exactly 1 mm^2 of stroma.
    Raster tumour10(W10, H10, SEG_LEVEL, 0.0, RasterKind::Mask);
    Raster stroma10(W10, H10, SEG_LEVEL, 0.0, RasterKind::Mask);
    if (with_tissue) {
        for (int y = 200; y < 1600; ++y)
            for (int x = 200; x < 1600; ++x) {
                const bool hole = x >= 400 && x < 1400 && y >= 400 && y < 1400;
                if (hole)
                    stroma10.at(x, y) = 1.0;
                else
                    tumour10.at(x, y) = 1.0;
            }
    }

    // Slide image at 20x: dark tumour, mid stroma, light background.
    Raster img20(W20, H20, DET_LEVEL, 0.95);
    if (with_tissue)
        for (int y = 0; y < H20; ++y)
            for (int x = 0; x < W20; ++x) {
                if (tumour10.at(x / 2, y / 2) != 0.0)
                    img20.at(x, y) = 0.3;
                else if (stroma10.at(x / 2, y / 2) != 0.0)
                    img20.at(x, y) = 0.6;
            }
    Raster img10 = resample(img20, SEG_LEVEL);

    // Plant TILs on a 40 px grid inside the stroma ([800,2800)^2 at 20x).
    FixtureInfo info;
    std::vector<std::pair<int, int>> points;
    if (with_tissue) {
        for (int i = 0; static_cast<long>(points.size()) < n_tils; ++i) {
            const int gx = 820 + (i % 50) * 40;
            const int gy = 820 + (i / 50) * 40;
            points.emplace_back(gx, gy);
        }
    }
    Raster til20 = dilate_gt_points(points, 3, W20, H20, DET_LEVEL);
    for (const auto& [px, py] : points)
        info.gt_points.push_back({(px + 0.5) * DET_LEVEL.mpp,
                                  (py + 0.5) * DET_LEVEL.mpp, 1.0});
    info.n_tils = static_cast<long>(points.size());
    info.tas_area_um2 = stroma10.area_um2();

    write_tiles(img20, 0, (fs::path(dir) / "tiles").string(), 512);
    write_tiles(img10, 1, (fs::path(dir) / "tiles").string(), 512);
    write_png_gray(tumour10, (fs::path(dir) / "tumour.png").string());
    write_png_gray(stroma10, (fs::path(dir) / "stroma.png").string());
    write_png_gray(til20, (fs::path(dir) / "til.png").string());
    save_detections(info.gt_points, (fs::path(dir) / "gt_detections.json").string());

    SlideManifest m;
    m.id = with_tissue ? "scoring-fixture" : "background-fixture";
    m.base_mpp = DET_LEVEL.mpp;
    m.width = W20;
    m.height = H20;
    m.tile_dir = "tiles";
    m.tile_size = 512;
    m.levels = 2;
    m.masks["tumour"] = {"tumour.png", 1};
    m.masks["stroma"] = {"stroma.png", 1};
    m.masks["til"] = {"til.png", 0};
    m.gt_detections = "gt_detections.json";
    info.manifest_path = (fs::path(dir) / "manifest.json").string();
    m.save(info.manifest_path);
    return info;
}

} // namespace

FixtureInfo build_scoring_fixture(const std::string& dir, long n_tils) {
    return build_slide(dir, true, n_tils);
}

FixtureInfo build_background_fixture(const std::string& dir) {
    return build_slide(dir, false, 0);
}

} // namespace tiager::test
