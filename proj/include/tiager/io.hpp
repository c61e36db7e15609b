#pragma once

#include <string>
#include <vector>

#include "tiager/bulk.hpp"
#include "tiager/detection.hpp"
#include "tiager/tiling.hpp"

namespace tiager {

/// {"points": [{"x_um": f, "y_um": f, "confidence": f}, ...]}
void save_detections(const std::vector<Detection>& dets, const std::string& path);
std::vector<Detection> load_detections(const std::string& path);

std::string tils_result_to_json(const TilsResult& r);
void save_tils_result(const TilsResult& r, const std::string& path);

/// Debug serialization of a tile plan: JSON list of {x, y, w, h}.
std::string tile_plan_to_json(const TilePlan& plan);

/// Plain JSON array of numbers (used for TILs-score lists in evaluation).
std::vector<double> load_number_array(const std::string& path);

} // namespace tiager
