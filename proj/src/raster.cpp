#include "tiager/raster.hpp"

#include <algorithm>
#include <cmath>

namespace tiager {

bool Raster::is_binary() const {
    for (double v : px_)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

long Raster::popcount() const {
    long n = 0;
    for (double v : px_)
        if (v != 0.0) ++n;
    return n;
}

std::vector<std::pair<int, int>> disk_offsets(int radius) {
    std::vector<std::pair<int, int>> offs;
    const long r2 = static_cast<long>(radius) * radius;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy <= r2)
                offs.emplace_back(dx, dy);
    return offs;
}

namespace {

// Gather-style erode/dilate: every output pixel scans the disk with early
// exit. Writes are row-disjoint, so rows parallelize cleanly.
Raster erode_or_dilate(const Raster& mask, bool dilate, int radius) {
    const auto offs = disk_offsets(radius);
    Raster out(mask.width(), mask.height(), mask.resolution(), 0.0, RasterKind::Mask);
    out.set_origin(mask.origin_x(), mask.origin_y());
    const int h = mask.height(), w = mask.width();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        double* orow = out.row(y);
        for (int x = 0; x < w; ++x) {
            if (dilate) {
                double v = 0.0;
                for (const auto& [dx, dy] : offs) {
                    if (mask.get(x + dx, y + dy) != 0.0) { v = 1.0; break; }
                }
                orow[x] = v;
            } else {
                double v = 1.0;
                for (const auto& [dx, dy] : offs) {
                    if (mask.get(x + dx, y + dy) == 0.0) { v = 0.0; break; }
                }
                orow[x] = v;
            }
        }
    }
    return out;
}

} // namespace

Raster morph(const Raster& mask, MorphOp op, int radius) {
    if (!mask.is_binary())
        throw InvalidInputError("morph: input raster is not binary");
    if (radius < 0)
        throw InvalidInputError("morph: radius must be non-negative");
    if (radius == 0) return mask;
    switch (op) {
    case MorphOp::Erode:  return erode_or_dilate(mask, false, radius);
    case MorphOp::Dilate: return erode_or_dilate(mask, true, radius);
    case MorphOp::Open:
        return erode_or_dilate(erode_or_dilate(mask, false, radius), true, radius);
    case MorphOp::Close:
        return erode_or_dilate(erode_or_dilate(mask, true, radius), false, radius);
    }
    throw InvalidInputError("morph: unknown operation");
}

Raster central_crop(const Raster& r, int out_w, int out_h) {
    if (out_w > r.width() || out_h > r.height() || out_w < 0 || out_h < 0)
        throw InvalidInputError("central_crop: output size exceeds input");
    const int off_x = (r.width() - out_w) / 2;
    const int off_y = (r.height() - out_h) / 2;
    Raster out(out_w, out_h, r.resolution(), 0.0, r.kind());
    out.set_origin(r.origin_x() + off_x, r.origin_y() + off_y);
    for (int y = 0; y < out_h; ++y) {
        const double* src = r.row(y + off_y) + off_x;
        std::copy(src, src + out_w, out.row(y));
    }
    return out;
}

Raster resample(const Raster& r, Resolution target) {
    if (target.mpp <= 0.0)
        throw InvalidInputError("resample: target mpp must be positive");
    const double f = target.mpp / r.resolution().mpp;
    if (std::abs(f - 1.0) < 1e-12) {
        Raster out = r;
        return out;
    }
    const bool mask = r.kind() == RasterKind::Mask;
    if (f > 1.0) {
        // Downscale: area-weighted box average over [i*f, (i+1)*f) windows.
        const int out_w = static_cast<int>(std::ceil(r.width() / f - 1e-9));
        const int out_h = static_cast<int>(std::ceil(r.height() / f - 1e-9));
        Raster out(std::max(out_w, 1), std::max(out_h, 1), target, 0.0, r.kind());
        out.set_origin(r.origin_x() / f, r.origin_y() / f);
        const int H = out.height(), W = out.width();
#pragma omp parallel for schedule(static)
        for (int oy = 0; oy < H; ++oy) {
            for (int ox = 0; ox < W; ++ox) {
                const double x0 = ox * f, x1 = (ox + 1) * f;
                const double y0 = oy * f, y1 = (oy + 1) * f;
                double sum = 0.0, area = 0.0;
                const int iy0 = static_cast<int>(std::floor(y0));
                const int iy1 = static_cast<int>(std::ceil(y1));
                const int ix0 = static_cast<int>(std::floor(x0));
                const int ix1 = static_cast<int>(std::ceil(x1));
                for (int iy = iy0; iy < iy1; ++iy) {
                    const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                    if (wy <= 0) continue;
                    for (int ix = ix0; ix < ix1; ++ix) {
                        const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                        if (wx <= 0) continue;
                        sum += wx * wy * r.get(ix, iy);
                        area += wx * wy;
                    }
                }
                const double v = area > 0 ? sum / area : 0.0;
                out.at(ox, oy) = mask ? (v >= 0.5 ? 1.0 : 0.0) : v;
            }
        }
        return out;
    }
    // Upscale: nearest neighbor.
    const int out_w = static_cast<int>(std::ceil(r.width() / f - 1e-9));
    const int out_h = static_cast<int>(std::ceil(r.height() / f - 1e-9));
    Raster out(std::max(out_w, 1), std::max(out_h, 1), target, 0.0, r.kind());
    out.set_origin(r.origin_x() / f, r.origin_y() / f);
    const int H = out.height(), W = out.width();
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < H; ++oy) {
        const int iy = std::min(static_cast<int>((oy + 0.5) * f), r.height() - 1);
        for (int ox = 0; ox < W; ++ox) {
            const int ix = std::min(static_cast<int>((ox + 0.5) * f), r.width() - 1);
            out.at(ox, oy) = r.at(ix, iy);
        }
    }
    return out;
}

} // namespace tiager
