#include "tiager/bulk.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "tiager/delaunay.hpp"

namespace tiager {

namespace {

// Clockwise Moore neighborhood, screen coordinates (y down), starting west.
constexpr int DIRS[8][2] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1},
                            {1, 0},  {1, 1},   {0, 1},  {-1, 1}};

int dir_index(int dx, int dy) {
    for (int i = 0; i < 8; ++i)
        if (DIRS[i][0] == dx && DIRS[i][1] == dy) return i;
    return 0;
}

/// Moore-neighbor tracing of one component's outer contour, starting from
/// its first pixel in scan order. Jacob's criterion terminates the walk.
std::vector<std::pair<int, int>> trace_contour(const ComponentSet& comps,
                                               int32_t comp) {
    const int w = comps.width, h = comps.height;
    auto is_member = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h) return false;
        return comps.labels[static_cast<size_t>(y) * w + x] == comp;
    };
    int sx = -1, sy = -1;
    for (int y = comps.components[comp].min_y; sy < 0 && y <= comps.components[comp].max_y; ++y)
        for (int x = comps.components[comp].min_x; x <= comps.components[comp].max_x; ++x)
            if (is_member(x, y)) { sx = x; sy = y; break; }

    std::vector<std::pair<int, int>> contour{{sx, sy}};
    int px = sx, py = sy;
    int bx = sx - 1, by = sy; // backtrack pixel, background by scan order
    const int bx0 = bx, by0 = by;
    const long cap = 8 * comps.components[comp].area + 64;
    for (long it = 0; it < cap; ++it) {
        const int di = dir_index(bx - px, by - py);
        int nx = -1, ny = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (di + k) % 8;
            const int qx = px + DIRS[d][0], qy = py + DIRS[d][1];
            if (is_member(qx, qy)) {
                bx = px + DIRS[(d + 7) % 8][0];
                by = py + DIRS[(d + 7) % 8][1];
                nx = qx;
                ny = qy;
                break;
            }
        }
        if (nx < 0) break; // isolated pixel
        px = nx;
        py = ny;
        if (px == sx && py == sy && bx == bx0 && by == by0) break;
        contour.emplace_back(px, py);
    }
    return contour;
}

void rasterize_triangle(Raster& out, const Point2& a, const Point2& b,
                        const Point2& c) {
    const int min_x = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int max_x = std::min(out.width() - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int min_y = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int max_y = std::min(out.height() - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    auto edge = [](const Point2& p, const Point2& q, double x, double y) {
        return (q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x);
    };
    const double area = edge(a, b, c.x, c.y);
    if (area == 0.0) return;
    const double sign = area > 0 ? 1.0 : -1.0;
    const double eps = -1e-9;
    for (int y = min_y; y <= max_y; ++y)
        for (int x = min_x; x <= max_x; ++x) {
            const double fx = x, fy = y;
            if (sign * edge(a, b, fx, fy) >= eps &&
                sign * edge(b, c, fx, fy) >= eps &&
                sign * edge(c, a, fx, fy) >= eps)
                out.at(x, y) = 1.0;
        }
}

void fill_holes(Raster& mask) {
    const int w = mask.width(), h = mask.height();
    std::vector<uint8_t> outside(static_cast<size_t>(w) * h, 0);
    std::deque<std::pair<int, int>> queue;
    auto push = [&](int x, int y) {
        const size_t idx = static_cast<size_t>(y) * w + x;
        if (outside[idx] || mask.at(x, y) != 0.0) return;
        outside[idx] = 1;
        queue.emplace_back(x, y);
    };
    for (int x = 0; x < w; ++x) { push(x, 0); push(x, h - 1); }
    for (int y = 0; y < h; ++y) { push(0, y); push(w - 1, y); }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        if (x > 0) push(x - 1, y);
        if (x + 1 < w) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < h) push(x, y + 1);
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y) == 0.0 && !outside[static_cast<size_t>(y) * w + x])
                mask.at(x, y) = 1.0;
}

} // namespace

Raster tumour_bulk(const Raster& tumour_mask, const BulkParams& params) {
    if (params.pre_close_radius < 0 || params.boundary_sample_step <= 0 ||
        params.max_edge_um <= 0.0)
        throw InvalidInputError("tumour_bulk: invalid parameters");

    Raster closed = morph(tumour_mask, MorphOp::Close, params.pre_close_radius);
    ComponentSet comps = connected_components(closed, 8);

    // Drop undersized components.
    Raster cleaned(closed.width(), closed.height(), closed.resolution(), 0.0,
                   RasterKind::Mask);
    cleaned.set_origin(closed.origin_x(), closed.origin_y());
    std::vector<int32_t> keep;
    for (size_t i = 0; i < comps.components.size(); ++i)
        if (comps.components[i].area >= params.min_component_area)
            keep.push_back(static_cast<int32_t>(i));
    {
        std::vector<uint8_t> kept_label(comps.components.size(), 0);
        for (int32_t k : keep) kept_label[k] = 1;
        for (size_t i = 0; i < comps.labels.size(); ++i)
            if (comps.labels[i] >= 0 && kept_label[comps.labels[i]])
                cleaned.pixels()[i] = 1.0;
    }

    // Sample every k-th pixel along each kept component's outer contour.
    std::vector<Point2> samples;
    for (int32_t k : keep) {
        const auto contour = trace_contour(comps, k);
        for (size_t i = 0; i < contour.size(); i += params.boundary_sample_step)
            samples.push_back({static_cast<double>(contour[i].first),
                               static_cast<double>(contour[i].second)});
    }

    Raster bulk = cleaned;
    const auto tris = delaunay(samples);
    const double max_edge_px = params.max_edge_um / tumour_mask.resolution().mpp;
    for (const Triangle& t : tris) {
        const Point2 &a = samples[t.a], &b = samples[t.b], &c = samples[t.c];
        const double e1 = std::hypot(a.x - b.x, a.y - b.y);
        const double e2 = std::hypot(b.x - c.x, b.y - c.y);
        const double e3 = std::hypot(c.x - a.x, c.y - a.y);
        if (std::max({e1, e2, e3}) <= max_edge_px)
            rasterize_triangle(bulk, a, b, c);
    }
    if (params.post_fill) fill_holes(bulk);
    return bulk;
}

Raster tumour_associated_stroma(const Raster& bulk, const Raster& stroma_mask) {
    if (bulk.width() != stroma_mask.width() || bulk.height() != stroma_mask.height() ||
        !(bulk.resolution() == stroma_mask.resolution()))
        throw InvalidInputError("tumour_associated_stroma: shape mismatch");
    if (!bulk.is_binary() || !stroma_mask.is_binary())
        throw InvalidInputError("tumour_associated_stroma: inputs must be binary");
    Raster out(bulk.width(), bulk.height(), bulk.resolution(), 0.0, RasterKind::Mask);
    out.set_origin(bulk.origin_x(), bulk.origin_y());
    const size_t n = out.size();
    auto op = out.pixels();
    auto bp = bulk.pixels();
    auto sp = stroma_mask.pixels();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i)
        op[i] = (bp[i] != 0.0 && sp[i] != 0.0) ? 1.0 : 0.0;
    return out;
}

long count_tils_in_mask(const std::vector<Detection>& detections,
                        const Raster& mask) {
    long n = 0;
    for (const Detection& d : detections) {
        const long x = mask.um_to_px_x(d.x_um);
        const long y = mask.um_to_px_y(d.y_um);
        if (mask.get(x, y) != 0.0) ++n;
    }
    return n;
}

int tils_score(long n, double a_tas_um2, double a_til_um2) {
    if (n < 0 || a_tas_um2 < 0.0 || a_til_um2 <= 0.0)
        throw InvalidInputError("tils_score: negative or non-positive input");
    if (a_tas_um2 == 0.0) {
        if (n == 0) return 0;
        throw DegenerateInputError("tils_score: TILs present but TAS area is zero");
    }
    const double raw = 100.0 * static_cast<double>(n) * a_til_um2 / a_tas_um2;
    const double rounded = std::round(raw); // half away from zero
    return static_cast<int>(std::clamp(rounded, 0.0, 100.0));
}

} // namespace tiager
