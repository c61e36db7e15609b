#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "tiager/raster.hpp"

namespace tiager {

/// Abstract window-read access to a slide. Reads outside the slide extent
/// are zero-filled. Implementations must allow concurrent reads.
class RasterSource {
public:
    virtual ~RasterSource() = default;
    virtual Resolution base_resolution() const = 0;
    virtual long base_width() const = 0;
    virtual long base_height() const = 0;
    virtual Raster read(Resolution res, long x, long y, int w, int h) const = 0;

    long width_at(Resolution res) const {
        const double f = res.mpp / base_resolution().mpp;
        return static_cast<long>(std::ceil(base_width() / f - 1e-9));
    }
    long height_at(Resolution res) const {
        const double f = res.mpp / base_resolution().mpp;
        return static_cast<long>(std::ceil(base_height() / f - 1e-9));
    }
};

/// Whole-slide raster held in memory; coarser levels are resampled lazily
/// and cached. Intended for tests and desk-scale fixtures.
class MemorySource : public RasterSource {
public:
    explicit MemorySource(Raster base);
    Resolution base_resolution() const override { return base_.resolution(); }
    long base_width() const override { return base_.width(); }
    long base_height() const override { return base_.height(); }
    Raster read(Resolution res, long x, long y, int w, int h) const override;

private:
    const Raster& level_for(Resolution res) const;
    Raster base_;
    mutable std::mutex mutex_;
    mutable std::map<double, Raster> cache_;
};

/// Reference to a co-registered class mask stored as a single PNG.
struct MaskRef {
    std::string path;
    int level = 0; // pyramid level, mpp = base_mpp * 2^level
};

/// JSON description of a tiled slide on disk. Tiles are 8-bit grayscale
/// PNGs named L{level}_X{col}_Y{row}.png inside `tile_dir`; level L is
/// downsampled by 2^L from the base.
struct SlideManifest {
    std::string id;
    double base_mpp = 0.5;
    long width = 0;
    long height = 0;
    std::string tile_dir;
    int tile_size = 512;
    int levels = 1;
    std::map<std::string, MaskRef> masks; // "tumour", "stroma", "til", "roi"
    std::string gt_detections;            // optional detections JSON
    std::string dir;                      // directory the manifest lives in

    static SlideManifest load(const std::string& path);
    void save(const std::string& path) const;

    Resolution level_resolution(int level) const {
        return Resolution{base_mpp * std::pow(2.0, level)};
    }
    std::string resolve(const std::string& rel) const;
};

/// Lazy tile-granular PNG reader with a small shared tile cache.
class SlideReader : public RasterSource {
public:
    explicit SlideReader(SlideManifest manifest);
    const SlideManifest& manifest() const { return manifest_; }

    Resolution base_resolution() const override { return Resolution{manifest_.base_mpp}; }
    long base_width() const override { return manifest_.width; }
    long base_height() const override { return manifest_.height; }

    /// Reads from the pyramid level whose mpp matches `res`; a coarser
    /// request than any stored level is served from the coarsest level and
    /// resampled.
    Raster read(Resolution res, long x, long y, int w, int h) const override;

private:
    int level_for(Resolution res) const;
    const Raster& tile(int level, long col, long row) const;
    long level_width(int level) const;
    long level_height(int level) const;

    SlideManifest manifest_;
    mutable std::mutex mutex_;
    mutable std::map<std::tuple<int, long, long>, Raster> cache_;
};

/// Loads a class mask referenced by the manifest at its stored level.
Raster load_manifest_mask(const SlideManifest& m, const std::string& name);

} // namespace tiager
