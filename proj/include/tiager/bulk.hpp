#pragma once

#include <vector>

#include "tiager/detection.hpp"
#include "tiager/raster.hpp"

namespace tiager {

/// Tumour-bulk construction parameters.
struct BulkParams {
    int pre_close_radius = 10;       // pixels
    long min_component_area = 500;   // pixels
    int boundary_sample_step = 8;    // pixels along each contour
    double max_edge_um = 250.0;      // triangle edge filter
    bool post_fill = true;           // fill enclosed holes
};

/// All the symbols of the TILs-score equation.
struct TilsResult {
    long n_tils = 0;
    double a_tas_um2 = 0.0;
    double a_til_um2 = 0.0;
    int tils_score = 0;
};

/// Concave-hull style bulk: close the tumour mask, drop small components,
/// sample each outer contour, Delaunay-triangulate the samples, keep
/// triangles whose longest edge fits under `max_edge_um`, rasterize their
/// union, OR with the cleaned mask and optionally fill holes.
Raster tumour_bulk(const Raster& tumour_mask, const BulkParams& params);

/// Per-pixel AND of bulk and stroma.
Raster tumour_associated_stroma(const Raster& bulk, const Raster& stroma_mask);

/// Number of detections whose containing pixel is set in the mask.
long count_tils_in_mask(const std::vector<Detection>& detections,
                        const Raster& mask);

/// Integer score: clamp(round(n * a_til / a_tas * 100), 0, 100).
/// A fully background slide (n = 0, a_tas = 0) scores 0.
int tils_score(long n, double a_tas_um2, double a_til_um2);

} // namespace tiager
