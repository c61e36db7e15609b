#include "tiager/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tiager {

namespace {

std::vector<long> axis_positions(long canvas, int patch, int stride) {
    std::vector<long> pos;
    if (canvas <= patch) {
        pos.push_back(0);
        return pos;
    }
    const long last = canvas - patch;
    for (long p = 0;; p += stride) {
        const long q = std::min(p, last);
        if (pos.empty() || pos.back() != q) pos.push_back(q);
        if (p >= last) break;
    }
    return pos;
}

} // namespace

TilePlan plan_tiles(long width, long height, int patch, int stride, int pad) {
    if (patch <= 0 || stride <= 0 || pad < 0 || width < 0 || height < 0)
        throw InvalidInputError("plan_tiles: invalid geometry");
    if (stride > patch)
        throw CoverageViolationError("plan_tiles: stride exceeds patch size");
    TilePlan plan;
    plan.canvas_w = width + 2L * pad;
    plan.canvas_h = height + 2L * pad;
    plan.patch = patch;
    plan.stride = stride;
    plan.pad = pad;
    const auto xs = axis_positions(plan.canvas_w, patch, stride);
    const auto ys = axis_positions(plan.canvas_h, patch, stride);
    plan.coords.reserve(xs.size() * ys.size());
    for (long y : ys)
        for (long x : xs)
            plan.coords.push_back({x, y, patch, patch});
    return plan;
}

Raster extract_patch(const Raster& raster, const TileCoord& coord, int pad) {
    Raster out(coord.w, coord.h, raster.resolution(), 0.0, raster.kind());
    const long sx = coord.x - pad;
    const long sy = coord.y - pad;
    out.set_origin(raster.origin_x() + sx, raster.origin_y() + sy);
    const int H = coord.h, W = coord.w;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y) {
        double* orow = out.row(y);
        for (int x = 0; x < W; ++x)
            orow[x] = raster.get(sx + x, sy + y);
    }
    return out;
}

Raster stitch(const std::vector<std::pair<TileCoord, Raster>>& patches,
              const TilePlan& plan, StitchMode mode) {
    // One output patch per planned coordinate, no extras.
    std::map<std::pair<long, long>, const Raster*> by_coord;
    for (const auto& [coord, r] : patches) {
        if (!by_coord.emplace(std::make_pair(coord.y, coord.x), &r).second)
            throw InvalidInputError("stitch: duplicate patch coordinate");
    }
    for (const auto& c : plan.coords)
        if (!by_coord.count({c.y, c.x}))
            throw IncompleteCoverageError("stitch: missing patch for planned tile");
    if (by_coord.size() != plan.coords.size())
        throw InvalidInputError("stitch: patch not present in plan");

    const long out_w = plan.canvas_w - 2L * plan.pad;
    const long out_h = plan.canvas_h - 2L * plan.pad;
    const Resolution res = patches.front().second.resolution();
    const RasterKind kind = patches.front().second.kind();
    Raster out(static_cast<int>(out_w), static_cast<int>(out_h), res, 0.0, kind);
    std::vector<double> sum(out.size(), 0.0);
    std::vector<double> first(out.size(), 0.0);
    std::vector<uint32_t> count(out.size(), 0);
    std::vector<uint8_t> uniform(out.size(), 1);

    // Accumulation order is fixed by the plan, so the result cannot depend
    // on the order patches were produced in.
    for (const auto& c : plan.coords) {
        const Raster& p = *by_coord.at({c.y, c.x});
        const long px0 = c.x + (c.w - p.width()) / 2 - plan.pad;
        const long py0 = c.y + (c.h - p.height()) / 2 - plan.pad;
        const int ph = p.height(), pw = p.width();
#pragma omp parallel for schedule(static)
        for (int y = 0; y < ph; ++y) {
            const long oy = py0 + y;
            if (oy < 0 || oy >= out_h) continue;
            const double* prow = p.row(y);
            for (int x = 0; x < pw; ++x) {
                const long ox = px0 + x;
                if (ox < 0 || ox >= out_w) continue;
                const size_t idx = static_cast<size_t>(oy) * out_w + ox;
                const double v = prow[x];
                if (count[idx] == 0) {
                    first[idx] = v;
                    sum[idx] = v;
                } else {
                    if (mode == StitchMode::Max)
                        sum[idx] = std::max(sum[idx], v);
                    else
                        sum[idx] += v;
                    if (v != first[idx]) uniform[idx] = 0;
                }
                ++count[idx];
            }
        }
    }

    const size_t n = out.size();
    auto px = out.pixels();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        if (count[i] == 0) continue;
        if (mode == StitchMode::Max || uniform[i])
            px[i] = mode == StitchMode::Max ? sum[i] : first[i];
        else
            px[i] = sum[i] / count[i];
    }
    for (size_t i = 0; i < n; ++i)
        if (count[i] == 0)
            throw IncompleteCoverageError("stitch: uncovered output pixel");
    return out;
}

} // namespace tiager
