#include "tiager/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tiager {

double dice(const Raster& pred, const Raster& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height())
        throw InvalidInputError("dice: shape mismatch");
    if (!pred.is_binary() || !gt.is_binary())
        throw InvalidInputError("dice: inputs must be binary");
    long inter = 0, p = 0, g = 0;
    const size_t n = pred.size();
    auto pp = pred.pixels();
    auto gp = gt.pixels();
#pragma omp parallel for schedule(static) reduction(+ : inter, p, g)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        const bool a = pp[i] != 0.0, b = gp[i] != 0.0;
        inter += a && b;
        p += a;
        g += b;
    }
    if (p + g == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

double mean_tumour_stroma_dice(double dice_tumour, double dice_stroma) {
    return (dice_tumour + dice_stroma) / 2.0;
}

double mean_tumour_stroma_dice(const Raster& pred_t, const Raster& gt_t,
                               const Raster& pred_s, const Raster& gt_s) {
    return mean_tumour_stroma_dice(dice(pred_t, gt_t), dice(pred_s, gt_s));
}

MatchResult match_detections(const std::vector<Detection>& preds,
                             const std::vector<std::pair<double, double>>& gts,
                             double hit_radius_um) {
    if (hit_radius_um <= 0.0)
        throw InvalidInputError("match_detections: hit radius must be positive");
    std::vector<int> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (preds[a].confidence != preds[b].confidence)
            return preds[a].confidence > preds[b].confidence;
        return std::tie(preds[a].y_um, preds[a].x_um) <
               std::tie(preds[b].y_um, preds[b].x_um);
    });
    std::vector<bool> gt_taken(gts.size(), false);
    MatchResult m;
    for (int pi : order) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_taken[gi]) continue;
            const double dx = preds[pi].x_um - gts[gi].first;
            const double dy = preds[pi].y_um - gts[gi].second;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d <= hit_radius_um && d < best_d) {
                best_d = d;
                best = static_cast<int>(gi);
            }
        }
        if (best >= 0) {
            gt_taken[best] = true;
            m.matches.emplace_back(pi, best, best_d);
        }
    }
    m.tp = static_cast<long>(m.matches.size());
    m.fp = static_cast<long>(preds.size()) - m.tp;
    m.fn = static_cast<long>(gts.size()) - m.tp;
    return m;
}

Prf f1_precision_recall(const MatchResult& m) {
    Prf out;
    out.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    out.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    out.f1 = out.precision + out.recall > 0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

FrocCurve froc(const std::vector<Detection>& preds,
               const std::vector<std::pair<double, double>>& gts,
               double hit_radius_um, double area_mm2,
               const std::vector<double>& targets) {
    if (gts.empty())
        throw DegenerateInputError("froc: sensitivity undefined without ground truth");
    if (area_mm2 <= 0.0)
        throw InvalidInputError("froc: area must be positive");
    if (targets.empty() || !std::is_sorted(targets.begin(), targets.end()))
        throw InvalidInputError("froc: targets must be non-empty ascending");

    std::vector<double> thresholds;
    for (const Detection& d : preds) thresholds.push_back(d.confidence);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());

    FrocCurve curve;
    for (double t : thresholds) {
        std::vector<Detection> sel;
        for (const Detection& d : preds)
            if (d.confidence >= t) sel.push_back(d);
        const MatchResult m = match_detections(sel, gts, hit_radius_um);
        const double sens = static_cast<double>(m.tp) / static_cast<double>(gts.size());
        curve.points.emplace_back(static_cast<double>(m.fp) / area_mm2, sens);
    }
    std::sort(curve.points.begin(), curve.points.end());

    // Step-wise from below: the best sensitivity reachable without
    // exceeding the fp budget.
    double total = 0.0;
    for (double target : targets) {
        double sens = 0.0;
        for (const auto& [fp_rate, s] : curve.points) {
            if (fp_rate > target) break;
            sens = std::max(sens, s);
        }
        total += sens;
    }
    curve.score = total / static_cast<double>(targets.size());
    return curve;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw InvalidInputError("pearson: need two equal-length vectors, n >= 2");
    const size_t n = xs.size();
    long double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= n;
    my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        const long double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0)
        throw DegenerateInputError("pearson: zero variance input");
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

} // namespace tiager
