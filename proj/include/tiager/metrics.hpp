#pragma once

#include <tuple>
#include <vector>

#include "tiager/detection.hpp"
#include "tiager/raster.hpp"

namespace tiager {

/// Matched/unmatched counts from point-detection matching.
/// tp == matches.size(), tp + fn == #gts, tp + fp == #preds.
struct MatchResult {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    std::vector<std::tuple<int, int, double>> matches; // (pred, gt, distance um)
};

struct Prf {
    double f1 = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

struct FrocCurve {
    std::vector<std::pair<double, double>> points; // (fp per mm^2, sensitivity)
    double score = 0.0; // mean sensitivity at the configured fp targets
};

/// 2|P∩G| / (|P|+|G|); two empty masks score 1 by convention.
double dice(const Raster& pred, const Raster& gt);

double mean_tumour_stroma_dice(double dice_tumour, double dice_stroma);
double mean_tumour_stroma_dice(const Raster& pred_t, const Raster& gt_t,
                               const Raster& pred_s, const Raster& gt_s);

/// Greedy confidence-ordered matching: each prediction (descending
/// confidence, ties by (y, x)) claims its nearest unmatched ground truth
/// within `hit_radius_um`.
MatchResult match_detections(const std::vector<Detection>& preds,
                             const std::vector<std::pair<double, double>>& gts,
                             double hit_radius_um);

Prf f1_precision_recall(const MatchResult& m);

/// Sweep the distinct prediction confidences as thresholds; at each one
/// record (fp per mm^2, sensitivity). The summary score is the mean of
/// the step-wise-from-below sensitivities at the fp targets.
FrocCurve froc(const std::vector<Detection>& preds,
               const std::vector<std::pair<double, double>>& gts,
               double hit_radius_um, double area_mm2,
               const std::vector<double>& targets);

/// Sample Pearson correlation coefficient.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace tiager
