#pragma once

#include <vector>

#include "tiager/raster.hpp"

namespace tiager {

/// One candidate TIL: a point in the slide physical frame.
struct Detection {
    double x_um = 0.0;
    double y_um = 0.0;
    double confidence = 0.0;
    friend bool operator==(const Detection&, const Detection&) = default;
};

struct Component {
    double centroid_x = 0.0; // pixels, sub-pixel
    double centroid_y = 0.0;
    long area = 0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

/// Connected components plus the label map they were derived from.
/// Labels index into `components`; background is -1. Components are
/// canonically ordered by (min_y, min_x).
struct ComponentSet {
    std::vector<Component> components;
    std::vector<int32_t> labels;
    int width = 0;
    int height = 0;
};

ComponentSet connected_components(const Raster& mask, int connectivity = 8);

/// Size-filter components and convert centroids to physical detections.
/// Confidence is the mean probability over member pixels.
std::vector<Detection> components_to_detections(const ComponentSet& comps,
                                                const Raster& prob,
                                                long min_area);

/// Greedy confidence-ordered suppression: repeatedly keep the most
/// confident detection (ties broken by ascending (y, x)) and drop every
/// other detection within `radius_um`. Kept set is returned in that order.
std::vector<Detection> nms(std::vector<Detection> detections, double radius_um);

/// Union of discrete disks of `radius` centered on each point.
Raster dilate_gt_points(const std::vector<std::pair<int, int>>& points,
                        int radius, int width, int height,
                        Resolution res = DET_LEVEL);

} // namespace tiager
