#pragma once

#include <string>
#include <vector>

#include "tiager/detection.hpp"
#include "tiager/png_io.hpp"
#include "tiager/raster.hpp"

namespace tiager {

/// Renders a review overlay: tissue thumbnail with tumour/stroma/bulk
/// contours, shaded TAS and detection circles. All rasters must share the
/// thumbnail's frame (same dimensions and resolution). Output bytes are
/// deterministic for fixed inputs.
void render_overlay(const Raster& thumb, const Raster& tumour,
                    const Raster& stroma, const Raster& bulk, const Raster& tas,
                    const std::vector<Detection>& detections,
                    const std::string& path);

} // namespace tiager
