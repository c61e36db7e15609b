#pragma once

#include <vector>

#include "tiager/detection.hpp"
#include "tiager/raster.hpp"
#include "tiager/tiling.hpp"

namespace tiager::serial {

/// Straight-line reference kernels. These are deliberately naive,
/// single-threaded implementations kept alongside the parallel kernels:
/// the test suites check the optimized paths against them, and the bench
/// tool compares their throughput.

/// Per-pixel min/max over the full disk neighborhood, no early exit.
Raster morph(const Raster& mask, MorphOp op, int radius);

/// BFS flood fill labeling.
ComponentSet connected_components(const Raster& mask, int connectivity = 8);

/// O(n^2) greedy suppression.
std::vector<Detection> nms(std::vector<Detection> detections, double radius_um);

/// Dense per-pixel sum/count accumulation.
Raster stitch(const std::vector<std::pair<TileCoord, Raster>>& patches,
              const TilePlan& plan, StitchMode mode = StitchMode::Average);

} // namespace tiager::serial
