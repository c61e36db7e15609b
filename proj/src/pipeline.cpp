#include "tiager/pipeline.hpp"

namespace tiager {

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(std::string(name) + ": " + e.what());
    }
}

} // namespace

ScoreArtifacts score_wsi(const RasterSource& wsi, const Ensemble& seg_ensemble,
                         const Ensemble& det_ensemble,
                         const PipelineConfig& cfg) {
    ScoreArtifacts a;
    a.seg = stage("segmentation",
                  [&] { return run_segmentation(wsi, seg_ensemble, cfg); });
    a.bulk = stage("bulk", [&] { return tumour_bulk(a.seg.tumour, cfg.bulk); });
    a.tas = stage("tas",
                  [&] { return tumour_associated_stroma(a.bulk, a.seg.stroma); });

    Raster roi = stage("roi", [&] { return resample(a.tas, DET_LEVEL); });
    // Resampled ROI can overshoot the detection canvas by a pixel; clip it.
    {
        const long W = wsi.width_at(DET_LEVEL), H = wsi.height_at(DET_LEVEL);
        if (roi.width() != W || roi.height() != H) {
            Raster clipped(static_cast<int>(W), static_cast<int>(H), DET_LEVEL, 0.0,
                           RasterKind::Mask);
            for (int y = 0; y < clipped.height(); ++y)
                for (int x = 0; x < clipped.width(); ++x)
                    clipped.at(x, y) = roi.get(x, y);
            roi = std::move(clipped);
        }
    }
    a.det_prob = stage("detection",
                       [&] { return run_detection(wsi, det_ensemble, cfg, &roi); });

    const Raster det_mask =
        stage("detection-threshold",
              [&] { return threshold(a.det_prob, cfg.det.threshold); });
    const ComponentSet comps =
        stage("connected-components",
              [&] { return connected_components(det_mask, cfg.det.connectivity); });
    std::vector<Detection> dets = stage("detections", [&] {
        return components_to_detections(comps, a.det_prob, cfg.det.min_area_px);
    });
    a.detections =
        stage("nms", [&] { return nms(std::move(dets), cfg.det.nms_radius_um); });

    a.result.n_tils = count_tils_in_mask(a.detections, a.tas);
    a.result.a_tas_um2 = a.tas.area_um2();
    a.result.a_til_um2 = cfg.score.a_til_um2;
    a.result.tils_score =
        stage("score", [&] {
            return tils_score(a.result.n_tils, a.result.a_tas_um2,
                              a.result.a_til_um2);
        });
    return a;
}

} // namespace tiager
