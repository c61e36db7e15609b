#include "tiager/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tiager {

namespace {

struct Tri {
    int a, b, c;
    double cx, cy, r2; // circumcircle
    bool valid = true;
};

bool circumcircle(const Point2& p1, const Point2& p2, const Point2& p3,
                  double& cx, double& cy, double& r2) {
    const double ax = p2.x - p1.x, ay = p2.y - p1.y;
    const double bx = p3.x - p1.x, by = p3.y - p1.y;
    const double d = 2.0 * (ax * by - ay * bx);
    if (std::abs(d) < 1e-12) return false;
    const double a2 = ax * ax + ay * ay;
    const double b2 = bx * bx + by * by;
    const double ux = (by * a2 - ay * b2) / d;
    const double uy = (ax * b2 - bx * a2) / d;
    cx = p1.x + ux;
    cy = p1.y + uy;
    r2 = ux * ux + uy * uy;
    return true;
}

} // namespace

std::vector<Triangle> delaunay(const std::vector<Point2>& points) {
    // Deduplicate while keeping original indices.
    std::vector<int> idx;
    {
        std::map<std::pair<double, double>, int> seen;
        for (size_t i = 0; i < points.size(); ++i)
            if (seen.emplace(std::make_pair(points[i].x, points[i].y),
                             static_cast<int>(i)).second)
                idx.push_back(static_cast<int>(i));
    }
    if (idx.size() < 3) return {};

    double min_x = points[idx[0]].x, max_x = min_x;
    double min_y = points[idx[0]].y, max_y = min_y;
    for (int i : idx) {
        min_x = std::min(min_x, points[i].x);
        max_x = std::max(max_x, points[i].x);
        min_y = std::min(min_y, points[i].y);
        max_y = std::max(max_y, points[i].y);
    }
    const double span = std::max({max_x - min_x, max_y - min_y, 1.0});
    const double mid_x = (min_x + max_x) / 2.0, mid_y = (min_y + max_y) / 2.0;

    // Super-triangle vertices live past the end of the input point list.
    std::vector<Point2> pts;
    pts.reserve(idx.size() + 3);
    for (int i : idx) pts.push_back(points[i]);
    const int s0 = static_cast<int>(pts.size());
    pts.push_back({mid_x - 20.0 * span, mid_y - span});
    pts.push_back({mid_x + 20.0 * span, mid_y - span});
    pts.push_back({mid_x, mid_y + 20.0 * span});

    std::vector<Tri> tris;
    {
        Tri t{s0, s0 + 1, s0 + 2, 0, 0, 0};
        circumcircle(pts[t.a], pts[t.b], pts[t.c], t.cx, t.cy, t.r2);
        tris.push_back(t);
    }

    for (int pi = 0; pi < s0; ++pi) {
        const Point2& p = pts[pi];
        // Collect edges of the cavity formed by triangles whose
        // circumcircle contains p; boundary edges appear exactly once.
        std::map<std::pair<int, int>, int> edge_count;
        std::vector<std::pair<int, int>> edges;
        for (Tri& t : tris) {
            if (!t.valid) continue;
            const double dx = p.x - t.cx, dy = p.y - t.cy;
            if (dx * dx + dy * dy <= t.r2 * (1.0 + 1e-12)) {
                t.valid = false;
                const std::pair<int, int> es[3] = {{t.a, t.b}, {t.b, t.c}, {t.c, t.a}};
                for (auto [u, v] : es) {
                    auto key = std::minmax(u, v);
                    ++edge_count[{key.first, key.second}];
                    edges.emplace_back(u, v);
                }
            }
        }
        std::vector<Tri> next;
        next.reserve(tris.size());
        for (const Tri& t : tris)
            if (t.valid) next.push_back(t);
        for (auto [u, v] : edges) {
            auto key = std::minmax(u, v);
            if (edge_count[{key.first, key.second}] != 1) continue;
            Tri t{u, v, pi, 0, 0, 0};
            if (!circumcircle(pts[t.a], pts[t.b], pts[t.c], t.cx, t.cy, t.r2))
                continue; // degenerate sliver, skip
            next.push_back(t);
        }
        tris = std::move(next);
    }

    std::vector<Triangle> out;
    for (const Tri& t : tris) {
        if (!t.valid) continue;
        if (t.a >= s0 || t.b >= s0 || t.c >= s0) continue;
        out.push_back({idx[t.a], idx[t.b], idx[t.c]});
    }
    return out;
}

} // namespace tiager
