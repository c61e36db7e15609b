#pragma once

#include <string>
#include <vector>

#include "tiager/bulk.hpp"

namespace tiager {

enum class BackendKind { Passthrough, Luminance, External };

/// Every tunable of the pipeline, with documented defaults. Loaded from
/// JSON; unknown keys are rejected outright.
struct PipelineConfig {
    int workers = 0; // 0 = all logical cores

    BackendKind backend = BackendKind::Passthrough;
    std::string external_command; // required when backend == External

    struct Seg {
        int open_radius_px = 5;
        double threshold_tumour = 0.5;
        double threshold_stroma = 0.5;
        int patch = 512;
        int stride = 256;
        int pad = 128;
        int ensemble = 5; // all folds
    } seg;

    struct Det {
        double threshold = 0.5;
        double nms_radius_um = 8.0;
        long min_area_px = 4;
        int connectivity = 8;
        int tile = 1024;
        int patch = 128;
        int stride = 100;
        bool stitch_max = false; // false = average overlapping outputs
        int ensemble = 3;        // top three folds
    } det;

    BulkParams bulk;

    struct Score {
        double a_til_um2 = 201.0619; // pi * (8 um)^2, 16 um read as diameter
    } score;

    struct Metrics {
        double hit_radius_um = 8.0;
        std::vector<double> froc_targets{10, 20, 50, 100, 200, 300};
    } metrics;

    void validate() const;

    static PipelineConfig load(const std::string& path);
    static PipelineConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
    void save(const std::string& path) const;
};

} // namespace tiager
