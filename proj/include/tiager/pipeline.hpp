#pragma once

#include "tiager/backend.hpp"
#include "tiager/bulk.hpp"

namespace tiager {

/// Everything score_wsi produces, kept around for rendering and debugging.
struct ScoreArtifacts {
    TilsResult result;
    SegMasks seg;       // SEG_LEVEL masks
    Raster bulk;        // SEG_LEVEL
    Raster tas;         // SEG_LEVEL
    Raster det_prob;    // DET_LEVEL TIL probability map
    std::vector<Detection> detections; // post-NMS
};

/// The whole scoring workflow: segmentation, bulk construction, TAS,
/// TAS-restricted detection, NMS and the integer TILs score.
ScoreArtifacts score_wsi(const RasterSource& wsi, const Ensemble& seg_ensemble,
                         const Ensemble& det_ensemble,
                         const PipelineConfig& cfg);

} // namespace tiager
