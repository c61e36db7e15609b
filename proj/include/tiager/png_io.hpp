#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tiager/raster.hpp"

namespace tiager {

/// 8-bit grayscale PNG -> Raster. Mask rasters binarize at >= 128.
Raster read_png_gray(const std::string& path, Resolution res,
                     RasterKind kind = RasterKind::Probability);

/// Raster -> 8-bit grayscale PNG; values are clamped to [0,1] and scaled
/// to 0..255 (masks map to 0/255 exactly).
void write_png_gray(const Raster& r, const std::string& path);

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> px; // RGB, row-major

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h),
        px(static_cast<size_t>(w) * h * 3, 0) {}
    uint8_t* at(int x, int y) {
        return px.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
};

void write_png_rgb(const RgbImage& img, const std::string& path);

} // namespace tiager
