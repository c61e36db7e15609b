#pragma once

#include <random>
#include <string>
#include <vector>

#include "tiager/detection.hpp"
#include "tiager/raster.hpp"
#include "tiager/slide.hpp"

namespace tiager::test {

/// Uniformly random binary mask.
Raster random_mask(int w, int h, std::mt19937& rng, double density = 0.5,
                   Resolution res = SEG_LEVEL);

/// Random blobby mask: a union of filled rectangles and disks.
Raster random_blob_mask(int w, int h, std::mt19937& rng, int blobs = 4);

struct FixtureInfo {
    std::string manifest_path;
    long n_tils = 0;             // planted TIL count
    double tas_area_um2 = 0.0;   // stroma area inside the bulk
    std::vector<Detection> gt_points;
};

/// Synthetic slide with a tumour frame enclosing exactly 1 mm^2 of stroma
/// and `n_tils` TILs planted on a sparse grid inside it. Tiles, masks,
/// ground-truth detections and the manifest are written under `dir`.
FixtureInfo build_scoring_fixture(const std::string& dir, long n_tils = 995);

/// All-background slide (no tumour, no stroma, no TILs).
FixtureInfo build_background_fixture(const std::string& dir);

/// Writes `level_img` as a PNG tile grid for pyramid level `level`.
void write_tiles(const Raster& level_img, int level, const std::string& tile_dir,
                 int tile_size);

} // namespace tiager::test
