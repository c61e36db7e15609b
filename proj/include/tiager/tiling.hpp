#pragma once

#include <vector>

#include "tiager/raster.hpp"

namespace tiager {

/// One patch window in padded-canvas coordinates.
struct TileCoord {
    long x = 0;
    long y = 0;
    int w = 0;
    int h = 0;
    friend bool operator==(const TileCoord&, const TileCoord&) = default;
};

/// Deterministic enumeration of patch windows over a zero-padded canvas.
/// Coordinates are row-major, sorted by (y, x); the last row/column is
/// clamped so the unpadded extent is always covered.
struct TilePlan {
    long canvas_w = 0;
    long canvas_h = 0;
    int patch = 0;
    int stride = 0;
    int pad = 0;
    std::vector<TileCoord> coords;
};

TilePlan plan_tiles(long width, long height, int patch, int stride, int pad);

/// Copy of the window `coord` (padded-canvas coordinates); pixels outside
/// the raster read as zero.
Raster extract_patch(const Raster& raster, const TileCoord& coord, int pad);

enum class StitchMode { Average, Max };

/// Recombine per-patch outputs into a raster of the plan's unpadded
/// dimensions. Patches smaller than the planned window (central crops) are
/// placed centered in their window. Result is independent of list order.
Raster stitch(const std::vector<std::pair<TileCoord, Raster>>& patches,
              const TilePlan& plan, StitchMode mode = StitchMode::Average);

} // namespace tiager
