#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tiager/errors.hpp"

namespace tiager {

/// Physical pixel spacing in microns per pixel.
struct Resolution {
    double mpp = 1.0;
    friend bool operator==(const Resolution& a, const Resolution& b) {
        return a.mpp == b.mpp;
    }
};

/// 10x magnification, the working level for tissue segmentation.
inline constexpr Resolution SEG_LEVEL{1.0};
/// 20x magnification, the working level for TIL detection.
inline constexpr Resolution DET_LEVEL{0.5};

/// What the scalar values mean: masks hold {0,1}, probability maps [0,1].
enum class RasterKind { Probability, Mask };

/// A 2-D scalar grid with physical placement metadata. The origin locates
/// pixel (0,0) in the slide frame, expressed in this raster's own pixel
/// units.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, Resolution res, double fill = 0.0,
           RasterKind kind = RasterKind::Probability)
        : width_(width), height_(height), res_(res), kind_(kind),
          px_(static_cast<size_t>(width) * height, fill) {
        if (width < 0 || height < 0)
            throw InvalidInputError("raster dimensions must be non-negative");
        if (res.mpp <= 0.0)
            throw InvalidInputError("resolution mpp must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return px_.size(); }
    Resolution resolution() const { return res_; }

    RasterKind kind() const { return kind_; }
    void set_kind(RasterKind k) { kind_ = k; }

    double origin_x() const { return origin_x_; }
    double origin_y() const { return origin_y_; }
    void set_origin(double x, double y) { origin_x_ = x; origin_y_ = y; }

    double& at(int x, int y) { return px_[static_cast<size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return px_[static_cast<size_t>(y) * width_ + x]; }

    /// Bounds-guarded read; the exterior reads as background (0).
    double get(long x, long y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0;
        return px_[static_cast<size_t>(y) * width_ + x];
    }

    std::span<double> pixels() { return px_; }
    std::span<const double> pixels() const { return px_; }
    double* row(int y) { return px_.data() + static_cast<size_t>(y) * width_; }
    const double* row(int y) const { return px_.data() + static_cast<size_t>(y) * width_; }

    bool is_binary() const;
    long popcount() const;

    /// Foreground area in square microns.
    double area_um2() const {
        return static_cast<double>(popcount()) * res_.mpp * res_.mpp;
    }

    /// Physical coordinate (microns, slide frame) of a pixel center.
    double px_to_um_x(double px) const { return (origin_x_ + px + 0.5) * res_.mpp; }
    double px_to_um_y(double py) const { return (origin_y_ + py + 0.5) * res_.mpp; }

    /// Pixel index containing a physical coordinate.
    long um_to_px_x(double um) const {
        return static_cast<long>(std::floor(um / res_.mpp - origin_x_));
    }
    long um_to_px_y(double um) const {
        return static_cast<long>(std::floor(um / res_.mpp - origin_y_));
    }

    friend bool operator==(const Raster& a, const Raster& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ &&
               a.res_ == b.res_ && a.px_ == b.px_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    Resolution res_{1.0};
    RasterKind kind_ = RasterKind::Probability;
    std::vector<double> px_;
};

enum class MorphOp { Erode, Dilate, Open, Close };

/// Offsets of the discrete disk {(dx,dy) : dx^2+dy^2 <= r^2}.
std::vector<std::pair<int, int>> disk_offsets(int radius);

/// Binary morphology with a discrete disk structuring element.
/// The exterior is treated as background. Radius 0 is the identity.
Raster morph(const Raster& mask, MorphOp op, int radius);

/// Centered sub-window; margins are floor-split and the origin is shifted
/// so physical placement is preserved.
Raster central_crop(const Raster& r, int out_w, int out_h);

/// Cross-magnification transfer. Downscale is a box average (masks are
/// re-binarized at 0.5), upscale is nearest neighbor.
Raster resample(const Raster& r, Resolution target);

} // namespace tiager
