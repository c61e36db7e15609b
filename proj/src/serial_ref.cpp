#include "tiager/serial_ref.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <tuple>

namespace tiager::serial {

namespace {

Raster scan(const Raster& mask, bool dilate, int radius) {
    Raster out(mask.width(), mask.height(), mask.resolution(), 0.0, RasterKind::Mask);
    out.set_origin(mask.origin_x(), mask.origin_y());
    const long r2 = static_cast<long>(radius) * radius;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            double v = dilate ? 0.0 : 1.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy > r2)
                        continue;
                    const double n = mask.get(x + dx, y + dy);
                    v = dilate ? std::max(v, n) : std::min(v, n);
                }
            out.at(x, y) = v;
        }
    return out;
}

} // namespace

Raster morph(const Raster& mask, MorphOp op, int radius) {
    if (!mask.is_binary())
        throw InvalidInputError("serial::morph: input raster is not binary");
    if (radius == 0) return mask;
    switch (op) {
    case MorphOp::Erode:  return scan(mask, false, radius);
    case MorphOp::Dilate: return scan(mask, true, radius);
    case MorphOp::Open:   return scan(scan(mask, false, radius), true, radius);
    case MorphOp::Close:  return scan(scan(mask, true, radius), false, radius);
    }
    throw InvalidInputError("serial::morph: unknown operation");
}

ComponentSet connected_components(const Raster& mask, int connectivity) {
    const int w = mask.width(), h = mask.height();
    ComponentSet out;
    out.width = w;
    out.height = h;
    out.labels.assign(static_cast<size_t>(w) * h, -1);

    struct Raw {
        double sx = 0, sy = 0;
        long area = 0;
        int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
        int32_t label = 0;
    };
    std::vector<Raw> raws;
    std::vector<int32_t> lbl(static_cast<size_t>(w) * h, -1);
    for (int sy0 = 0; sy0 < h; ++sy0)
        for (int sx0 = 0; sx0 < w; ++sx0) {
            const size_t sidx = static_cast<size_t>(sy0) * w + sx0;
            if (mask.at(sx0, sy0) == 0.0 || lbl[sidx] >= 0) continue;
            Raw raw;
            raw.label = static_cast<int32_t>(raws.size());
            raw.min_x = raw.max_x = sx0;
            raw.min_y = raw.max_y = sy0;
            std::deque<std::pair<int, int>> queue{{sx0, sy0}};
            lbl[sidx] = raw.label;
            while (!queue.empty()) {
                auto [x, y] = queue.front();
                queue.pop_front();
                raw.sx += x;
                raw.sy += y;
                ++raw.area;
                raw.min_x = std::min(raw.min_x, x);
                raw.max_x = std::max(raw.max_x, x);
                raw.min_y = std::min(raw.min_y, y);
                raw.max_y = std::max(raw.max_y, y);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        if (connectivity == 4 && dx != 0 && dy != 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const size_t nidx = static_cast<size_t>(ny) * w + nx;
                        if (mask.at(nx, ny) == 0.0 || lbl[nidx] >= 0) continue;
                        lbl[nidx] = raw.label;
                        queue.emplace_back(nx, ny);
                    }
            }
            raws.push_back(raw);
        }

    // Ties in (min_y, min_x) fall back to discovery order, i.e. the scan
    // order of each component's first pixel.
    std::sort(raws.begin(), raws.end(), [](const Raw& a, const Raw& b) {
        return std::tie(a.min_y, a.min_x, a.label) <
               std::tie(b.min_y, b.min_x, b.label);
    });
    std::vector<int32_t> remap(raws.size());
    for (size_t i = 0; i < raws.size(); ++i) {
        remap[raws[i].label] = static_cast<int32_t>(i);
        out.components.push_back({raws[i].sx / raws[i].area, raws[i].sy / raws[i].area,
                                  raws[i].area, raws[i].min_x, raws[i].min_y,
                                  raws[i].max_x, raws[i].max_y});
    }
    for (size_t i = 0; i < lbl.size(); ++i)
        if (lbl[i] >= 0) out.labels[i] = remap[lbl[i]];
    return out;
}

std::vector<Detection> nms(std::vector<Detection> detections, double radius_um) {
    std::sort(detections.begin(), detections.end(),
              [](const Detection& a, const Detection& b) {
                  if (a.confidence != b.confidence) return a.confidence > b.confidence;
                  return std::tie(a.y_um, a.x_um) < std::tie(b.y_um, b.x_um);
              });
    std::vector<Detection> kept;
    std::vector<bool> removed(detections.size(), false);
    for (size_t i = 0; i < detections.size(); ++i) {
        if (removed[i]) continue;
        kept.push_back(detections[i]);
        for (size_t j = i + 1; j < detections.size(); ++j) {
            if (removed[j]) continue;
            const double dx = detections[i].x_um - detections[j].x_um;
            const double dy = detections[i].y_um - detections[j].y_um;
            if (dx * dx + dy * dy <= radius_um * radius_um) removed[j] = true;
        }
    }
    return kept;
}

Raster stitch(const std::vector<std::pair<TileCoord, Raster>>& patches,
              const TilePlan& plan, StitchMode mode) {
    const long out_w = plan.canvas_w - 2L * plan.pad;
    const long out_h = plan.canvas_h - 2L * plan.pad;
    std::vector<std::pair<TileCoord, Raster>> sorted = patches;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first.y, a.first.x) < std::tie(b.first.y, b.first.x);
    });
    const Resolution res = sorted.front().second.resolution();
    Raster out(static_cast<int>(out_w), static_cast<int>(out_h), res, 0.0,
               sorted.front().second.kind());
    std::vector<double> acc(out.size(), 0.0);
    std::vector<long> cnt(out.size(), 0);
    for (const auto& [c, p] : sorted) {
        const long px0 = c.x + (c.w - p.width()) / 2 - plan.pad;
        const long py0 = c.y + (c.h - p.height()) / 2 - plan.pad;
        for (int y = 0; y < p.height(); ++y)
            for (int x = 0; x < p.width(); ++x) {
                const long ox = px0 + x, oy = py0 + y;
                if (ox < 0 || oy < 0 || ox >= out_w || oy >= out_h) continue;
                const size_t idx = static_cast<size_t>(oy) * out_w + ox;
                if (mode == StitchMode::Max)
                    acc[idx] = cnt[idx] ? std::max(acc[idx], p.at(x, y)) : p.at(x, y);
                else
                    acc[idx] += p.at(x, y);
                ++cnt[idx];
            }
    }
    for (size_t i = 0; i < out.size(); ++i) {
        if (cnt[i] == 0)
            throw IncompleteCoverageError("serial::stitch: uncovered pixel");
        out.pixels()[i] = mode == StitchMode::Max ? acc[i] : acc[i] / cnt[i];
    }
    return out;
}

} // namespace tiager::serial
