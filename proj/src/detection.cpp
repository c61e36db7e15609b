#include "tiager/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace tiager {

namespace {

int32_t uf_find(std::vector<int32_t>& parent, int32_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void uf_union(std::vector<int32_t>& parent, int32_t a, int32_t b) {
    a = uf_find(parent, a);
    b = uf_find(parent, b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

} // namespace

ComponentSet connected_components(const Raster& mask, int connectivity) {
    if (!mask.is_binary())
        throw InvalidInputError("connected_components: input is not binary");
    if (connectivity != 4 && connectivity != 8)
        throw InvalidInputError("connected_components: connectivity must be 4 or 8");

    const int w = mask.width(), h = mask.height();
    ComponentSet out;
    out.width = w;
    out.height = h;
    out.labels.assign(static_cast<size_t>(w) * h, -1);

    // Two-pass union-find labeling.
    std::vector<int32_t> parent;
    std::vector<int32_t> provisional(static_cast<size_t>(w) * h, -1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.at(x, y) == 0.0) continue;
            const size_t idx = static_cast<size_t>(y) * w + x;
            int32_t label = -1;
            auto consider = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
                const int32_t nl = provisional[static_cast<size_t>(ny) * w + nx];
                if (nl < 0) return;
                if (label < 0)
                    label = uf_find(parent, nl);
                else
                    uf_union(parent, label, nl);
            };
            consider(x - 1, y);
            consider(x, y - 1);
            if (connectivity == 8) {
                consider(x - 1, y - 1);
                consider(x + 1, y - 1);
            }
            if (label < 0) {
                label = static_cast<int32_t>(parent.size());
                parent.push_back(label);
            }
            provisional[idx] = label;
        }
    }

    // Resolve labels and accumulate statistics.
    struct Acc {
        double sx = 0, sy = 0;
        long area = 0;
        int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
        bool init = false;
    };
    std::unordered_map<int32_t, Acc> accs;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            if (provisional[idx] < 0) continue;
            const int32_t root = uf_find(parent, provisional[idx]);
            provisional[idx] = root;
            Acc& a = accs[root];
            if (!a.init) {
                a.min_x = a.max_x = x;
                a.min_y = a.max_y = y;
                a.init = true;
            }
            a.sx += x;
            a.sy += y;
            ++a.area;
            a.min_x = std::min(a.min_x, x);
            a.max_x = std::max(a.max_x, x);
            a.min_y = std::min(a.min_y, y);
            a.max_y = std::max(a.max_y, y);
        }
    }

    std::vector<std::pair<int32_t, Acc>> ordered(accs.begin(), accs.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& l, const auto& r) {
        return std::tie(l.second.min_y, l.second.min_x, l.first) <
               std::tie(r.second.min_y, r.second.min_x, r.first);
    });
    std::unordered_map<int32_t, int32_t> remap;
    out.components.reserve(ordered.size());
    for (const auto& [root, a] : ordered) {
        remap[root] = static_cast<int32_t>(out.components.size());
        out.components.push_back({a.sx / a.area, a.sy / a.area, a.area,
                                  a.min_x, a.min_y, a.max_x, a.max_y});
    }
    for (size_t i = 0; i < out.labels.size(); ++i)
        if (provisional[i] >= 0) out.labels[i] = remap.at(provisional[i]);
    return out;
}

std::vector<Detection> components_to_detections(const ComponentSet& comps,
                                                const Raster& prob,
                                                long min_area) {
    if (prob.width() != comps.width || prob.height() != comps.height)
        throw InvalidInputError("components_to_detections: shape mismatch");
    std::vector<double> prob_sum(comps.components.size(), 0.0);
    for (int y = 0; y < comps.height; ++y)
        for (int x = 0; x < comps.width; ++x) {
            const int32_t l = comps.labels[static_cast<size_t>(y) * comps.width + x];
            if (l >= 0) prob_sum[l] += prob.at(x, y);
        }
    std::vector<Detection> dets;
    for (size_t i = 0; i < comps.components.size(); ++i) {
        const Component& c = comps.components[i];
        if (c.area < min_area) continue;
        dets.push_back({prob.px_to_um_x(c.centroid_x),
                        prob.px_to_um_y(c.centroid_y),
                        prob_sum[i] / c.area});
    }
    return dets;
}

std::vector<Detection> nms(std::vector<Detection> detections, double radius_um) {
    if (radius_um <= 0.0)
        throw InvalidInputError("nms: radius must be positive");
    std::sort(detections.begin(), detections.end(),
              [](const Detection& a, const Detection& b) {
                  if (a.confidence != b.confidence) return a.confidence > b.confidence;
                  return std::tie(a.y_um, a.x_um) < std::tie(b.y_um, b.x_um);
              });
    // Kept detections are bucketed on a grid of cell size `radius_um`, so a
    // candidate only has to check its 3x3 cell neighborhood.
    struct CellHash {
        size_t operator()(const std::pair<long, long>& c) const {
            return std::hash<long>()(c.first * 73856093L ^ c.second * 19349663L);
        }
    };
    std::unordered_map<std::pair<long, long>, std::vector<size_t>, CellHash> grid;
    std::vector<Detection> kept;
    const double r2 = radius_um * radius_um;
    for (const Detection& d : detections) {
        const long cx = static_cast<long>(std::floor(d.x_um / radius_um));
        const long cy = static_cast<long>(std::floor(d.y_um / radius_um));
        bool suppressed = false;
        for (long ny = cy - 1; ny <= cy + 1 && !suppressed; ++ny)
            for (long nx = cx - 1; nx <= cx + 1 && !suppressed; ++nx) {
                auto it = grid.find({nx, ny});
                if (it == grid.end()) continue;
                for (size_t ki : it->second) {
                    const double dx = kept[ki].x_um - d.x_um;
                    const double dy = kept[ki].y_um - d.y_um;
                    if (dx * dx + dy * dy <= r2) { suppressed = true; break; }
                }
            }
        if (!suppressed) {
            grid[{cx, cy}].push_back(kept.size());
            kept.push_back(d);
        }
    }
    return kept;
}

Raster dilate_gt_points(const std::vector<std::pair<int, int>>& points,
                        int radius, int width, int height, Resolution res) {
    if (radius < 0)
        throw InvalidInputError("dilate_gt_points: radius must be non-negative");
    Raster out(width, height, res, 0.0, RasterKind::Mask);
    const auto offs = disk_offsets(radius);
    for (const auto& [px, py] : points) {
        if (px < 0 || py < 0 || px >= width || py >= height)
            throw InvalidInputError("dilate_gt_points: point out of bounds");
        for (const auto& [dx, dy] : offs) {
            const int x = px + dx, y = py + dy;
            if (x >= 0 && y >= 0 && x < width && y < height) out.at(x, y) = 1.0;
        }
    }
    return out;
}

} // namespace tiager
