#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tiager/config.hpp"
#include "tiager/raster.hpp"
#include "tiager/slide.hpp"

namespace tiager {

/// Tissue classes produced by segmentation backends.
enum class SegClass { Tumour = 0, Stroma = 1, Other = 2 };

enum class BackendFlavor { Segmentation, Detection };

/// The seam that stands in for trained model weights: a deterministic
/// patch -> probability-raster map. Segmentation backends emit one raster
/// per SegClass (summing to <= 1 + eps per pixel); detection backends emit
/// a single TIL probability raster.
///
/// A backend is either internally synchronized (thread_safe() == true) or
/// the pipeline serializes calls to it behind a lock.
class SegmentationBackend {
public:
    virtual ~SegmentationBackend() = default;
    virtual BackendFlavor flavor() const = 0;
    virtual int patch_size() const = 0;
    virtual Resolution input_resolution() const = 0;
    virtual bool thread_safe() const = 0;
    virtual std::vector<Raster> infer(const Raster& patch) const = 0;
};

/// Emits co-registered ground-truth rasters as probabilities, keyed off the
/// patch origin. Enables exact end-to-end tests without trained weights.
class PassthroughBackend : public SegmentationBackend {
public:
    /// Segmentation flavor: tumour + stroma masks at SEG_LEVEL.
    PassthroughBackend(std::shared_ptr<const Raster> tumour,
                       std::shared_ptr<const Raster> stroma, int patch_size);
    /// Detection flavor: TIL mask at DET_LEVEL.
    PassthroughBackend(std::shared_ptr<const Raster> til, int patch_size);

    BackendFlavor flavor() const override { return flavor_; }
    int patch_size() const override { return patch_size_; }
    Resolution input_resolution() const override { return res_; }
    bool thread_safe() const override { return true; }
    std::vector<Raster> infer(const Raster& patch) const override;

private:
    BackendFlavor flavor_;
    int patch_size_;
    Resolution res_;
    std::shared_ptr<const Raster> tumour_, stroma_, til_;
};

/// Bands patch luminance into classes: dark reads as tumour, mid-tones as
/// stroma. A stand-in that produces non-trivial tile seams.
class LuminanceBackend : public SegmentationBackend {
public:
    LuminanceBackend(BackendFlavor flavor, int patch_size, Resolution res,
                     double dark_cut = 0.45, double light_cut = 0.8);
    BackendFlavor flavor() const override { return flavor_; }
    int patch_size() const override { return patch_size_; }
    Resolution input_resolution() const override { return res_; }
    bool thread_safe() const override { return true; }
    std::vector<Raster> infer(const Raster& patch) const override;

private:
    BackendFlavor flavor_;
    int patch_size_;
    Resolution res_;
    double dark_cut_, light_cut_;
};

/// Shells out to a subprocess speaking a one-patch-per-request framed
/// binary protocol: 4-byte little-endian payload length, then raw
/// row-major float32 pixels. The response payload must be k * w * h
/// floats with k = 3 (segmentation) or k = 1 (detection).
class ExternalBackend : public SegmentationBackend {
public:
    ExternalBackend(std::string command, BackendFlavor flavor, int patch_size,
                    Resolution res);
    ~ExternalBackend() override;
    BackendFlavor flavor() const override { return flavor_; }
    int patch_size() const override { return patch_size_; }
    Resolution input_resolution() const override { return res_; }
    bool thread_safe() const override { return true; } // internally locked
    std::vector<Raster> infer(const Raster& patch) const override;

private:
    void launch() const;
    std::string command_;
    BackendFlavor flavor_;
    int patch_size_;
    Resolution res_;
    mutable std::mutex mutex_;
    mutable int in_fd_ = -1;  // write requests here
    mutable int out_fd_ = -1; // read responses here
    mutable long pid_ = -1;
};

/// An ordered list of same-flavor, same-geometry backends whose outputs
/// are averaged.
struct Ensemble {
    std::vector<std::shared_ptr<SegmentationBackend>> members;
    BackendFlavor flavor() const;
    void validate() const;
};

/// Per-pixel arithmetic mean of identically shaped probability rasters.
Raster ensemble_average(const std::vector<Raster>& outputs);

/// prob >= t -> 1 else 0.
Raster threshold(const Raster& prob, double t);

struct SegMasks {
    Raster tumour;
    Raster stroma;
};

/// Full-slide tissue segmentation at SEG_LEVEL: tile, ensemble-average,
/// central-crop, stitch, threshold, then open the tumour mask.
SegMasks run_segmentation(const RasterSource& wsi, const Ensemble& ensemble,
                          const PipelineConfig& cfg);

/// Full-slide TIL probability map at DET_LEVEL: outer tiles subdivided
/// into strided patches. Tiles that do not intersect `roi` (when given)
/// are skipped without invoking the backend.
Raster run_detection(const RasterSource& wsi, const Ensemble& ensemble,
                     const PipelineConfig& cfg, const Raster* roi = nullptr);

/// Builds the configured backend ensembles for a slide.
Ensemble make_seg_ensemble(const PipelineConfig& cfg, const SlideManifest* manifest);
Ensemble make_det_ensemble(const PipelineConfig& cfg, const SlideManifest* manifest);

} // namespace tiager
