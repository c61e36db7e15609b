#pragma once

#include <vector>

namespace tiager {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Triangle {
    int a = 0, b = 0, c = 0; // indices into the input point list
};

/// Bowyer-Watson Delaunay triangulation. Duplicate points are ignored.
/// Returns an empty list when fewer than three distinct points remain or
/// the input is (near-)collinear.
std::vector<Triangle> delaunay(const std::vector<Point2>& points);

} // namespace tiager
