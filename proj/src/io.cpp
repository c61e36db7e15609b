#include "tiager/io.hpp"

#include <fstream>

#include <json.hpp>

namespace tiager {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("io: cannot open " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::parse_error& e) {
        throw IoError("io: " + path + ": " + e.what());
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("io: cannot write " + path);
    out << text;
}

} // namespace

void save_detections(const std::vector<Detection>& dets, const std::string& path) {
    json pts = json::array();
    for (const Detection& d : dets)
        pts.push_back({{"x_um", d.x_um}, {"y_um", d.y_um},
                       {"confidence", d.confidence}});
    write_file(path, json{{"points", pts}}.dump(2) + "\n");
}

std::vector<Detection> load_detections(const std::string& path) {
    const json j = parse_file(path);
    std::vector<Detection> dets;
    try {
        for (const json& p : j.at("points"))
            dets.push_back({p.at("x_um"), p.at("y_um"), p.value("confidence", 1.0)});
    } catch (const json::exception& e) {
        throw IoError("io: " + path + ": " + e.what());
    }
    return dets;
}

std::string tils_result_to_json(const TilsResult& r) {
    return json{{"n_tils", r.n_tils},
                {"a_tas_um2", r.a_tas_um2},
                {"a_til_um2", r.a_til_um2},
                {"tils_score", r.tils_score}}
               .dump(2) +
           "\n";
}

void save_tils_result(const TilsResult& r, const std::string& path) {
    write_file(path, tils_result_to_json(r));
}

std::string tile_plan_to_json(const TilePlan& plan) {
    json coords = json::array();
    for (const TileCoord& c : plan.coords)
        coords.push_back({{"x", c.x}, {"y", c.y}, {"w", c.w}, {"h", c.h}});
    return coords.dump();
}

std::vector<double> load_number_array(const std::string& path) {
    const json j = parse_file(path);
    if (!j.is_array()) throw IoError("io: " + path + ": expected a JSON array");
    std::vector<double> out;
    for (const json& v : j) out.push_back(v.get<double>());
    return out;
}

} // namespace tiager
