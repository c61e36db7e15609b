#include "tiager/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace tiager {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + scope + it.key() + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

BackendKind parse_backend(const std::string& s) {
    if (s == "passthrough") return BackendKind::Passthrough;
    if (s == "luminance") return BackendKind::Luminance;
    if (s == "external") return BackendKind::External;
    throw ConfigError("config: unknown backend '" + s + "'");
}

std::string backend_name(BackendKind k) {
    switch (k) {
    case BackendKind::Passthrough: return "passthrough";
    case BackendKind::Luminance: return "luminance";
    case BackendKind::External: return "external";
    }
    return "passthrough";
}

} // namespace

void PipelineConfig::validate() const {
    auto check = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(std::string("config: ") + msg);
    };
    check(workers >= 0, "workers must be >= 0");
    check(seg.open_radius_px >= 0, "seg.open_radius_px must be >= 0");
    check(seg.threshold_tumour >= 0 && seg.threshold_tumour <= 1,
          "seg.threshold.tumour must be in [0,1]");
    check(seg.threshold_stroma >= 0 && seg.threshold_stroma <= 1,
          "seg.threshold.stroma must be in [0,1]");
    check(seg.patch > 0 && seg.stride > 0 && seg.stride <= seg.patch,
          "seg patch/stride geometry invalid");
    check(seg.pad >= 0, "seg.pad must be >= 0");
    check(seg.ensemble >= 1, "seg.ensemble must be >= 1");
    check(det.threshold >= 0 && det.threshold <= 1, "det.threshold must be in [0,1]");
    check(det.nms_radius_um > 0, "det.nms_radius_um must be positive");
    check(det.min_area_px >= 0, "det.min_area_px must be >= 0");
    check(det.connectivity == 4 || det.connectivity == 8,
          "det.connectivity must be 4 or 8");
    check(det.tile > 0 && det.patch > 0 && det.stride > 0 &&
              det.stride <= det.patch && det.patch <= det.tile,
          "det tile/patch/stride geometry invalid");
    check(det.ensemble >= 1, "det.ensemble must be >= 1");
    check(bulk.pre_close_radius >= 0, "bulk.pre_close_radius_px must be >= 0");
    check(bulk.min_component_area >= 0, "bulk.min_component_area_px must be >= 0");
    check(bulk.boundary_sample_step > 0, "bulk.boundary_sample_step_px must be positive");
    check(bulk.max_edge_um > 0, "bulk.max_edge_um must be positive");
    check(score.a_til_um2 > 0, "score.a_til_um2 must be positive");
    check(metrics.hit_radius_um > 0, "metrics.hit_radius_um must be positive");
    check(!metrics.froc_targets.empty() &&
              std::is_sorted(metrics.froc_targets.begin(), metrics.froc_targets.end()),
          "metrics.froc_targets must be non-empty ascending");
    if (backend == BackendKind::External)
        check(!external_command.empty(), "external backend requires external.command");
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    PipelineConfig cfg;
    reject_unknown(j, {"workers", "backend", "external", "seg", "det", "bulk",
                       "score", "metrics"}, "");
    read(j, "workers", cfg.workers);
    if (j.contains("backend")) cfg.backend = parse_backend(j.at("backend"));
    if (j.contains("external")) {
        const json& e = j.at("external");
        reject_unknown(e, {"command"}, "external.");
        read(e, "command", cfg.external_command);
    }
    if (j.contains("seg")) {
        const json& s = j.at("seg");
        reject_unknown(s, {"open_radius_px", "threshold", "patch", "stride",
                           "pad", "ensemble"}, "seg.");
        read(s, "open_radius_px", cfg.seg.open_radius_px);
        if (s.contains("threshold")) {
            const json& t = s.at("threshold");
            reject_unknown(t, {"tumour", "stroma"}, "seg.threshold.");
            read(t, "tumour", cfg.seg.threshold_tumour);
            read(t, "stroma", cfg.seg.threshold_stroma);
        }
        read(s, "patch", cfg.seg.patch);
        read(s, "stride", cfg.seg.stride);
        read(s, "pad", cfg.seg.pad);
        read(s, "ensemble", cfg.seg.ensemble);
    }
    if (j.contains("det")) {
        const json& d = j.at("det");
        reject_unknown(d, {"threshold", "nms_radius_um", "min_area_px",
                           "connectivity", "tile", "patch", "stride",
                           "stitch_mode", "ensemble"}, "det.");
        read(d, "threshold", cfg.det.threshold);
        read(d, "nms_radius_um", cfg.det.nms_radius_um);
        read(d, "min_area_px", cfg.det.min_area_px);
        read(d, "connectivity", cfg.det.connectivity);
        read(d, "tile", cfg.det.tile);
        read(d, "patch", cfg.det.patch);
        read(d, "stride", cfg.det.stride);
        if (d.contains("stitch_mode")) {
            const std::string m = d.at("stitch_mode");
            if (m != "average" && m != "max")
                throw ConfigError("config: det.stitch_mode must be average or max");
            cfg.det.stitch_max = m == "max";
        }
        read(d, "ensemble", cfg.det.ensemble);
    }
    if (j.contains("bulk")) {
        const json& b = j.at("bulk");
        reject_unknown(b, {"pre_close_radius_px", "min_component_area_px",
                           "boundary_sample_step_px", "max_edge_um", "post_fill"},
                       "bulk.");
        read(b, "pre_close_radius_px", cfg.bulk.pre_close_radius);
        read(b, "min_component_area_px", cfg.bulk.min_component_area);
        read(b, "boundary_sample_step_px", cfg.bulk.boundary_sample_step);
        read(b, "max_edge_um", cfg.bulk.max_edge_um);
        read(b, "post_fill", cfg.bulk.post_fill);
    }
    if (j.contains("score")) {
        const json& s = j.at("score");
        reject_unknown(s, {"a_til_um2"}, "score.");
        read(s, "a_til_um2", cfg.score.a_til_um2);
    }
    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        reject_unknown(m, {"hit_radius_um", "froc_targets"}, "metrics.");
        read(m, "hit_radius_um", cfg.metrics.hit_radius_um);
        read(m, "froc_targets", cfg.metrics.froc_targets);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string PipelineConfig::to_json_text() const {
    json j;
    j["workers"] = workers;
    j["backend"] = backend_name(backend);
    j["external"] = {{"command", external_command}};
    j["seg"] = {{"open_radius_px", seg.open_radius_px},
                {"threshold", {{"tumour", seg.threshold_tumour},
                               {"stroma", seg.threshold_stroma}}},
                {"patch", seg.patch},
                {"stride", seg.stride},
                {"pad", seg.pad},
                {"ensemble", seg.ensemble}};
    j["det"] = {{"threshold", det.threshold},
                {"nms_radius_um", det.nms_radius_um},
                {"min_area_px", det.min_area_px},
                {"connectivity", det.connectivity},
                {"tile", det.tile},
                {"patch", det.patch},
                {"stride", det.stride},
                {"stitch_mode", det.stitch_max ? "max" : "average"},
                {"ensemble", det.ensemble}};
    j["bulk"] = {{"pre_close_radius_px", bulk.pre_close_radius},
                 {"min_component_area_px", bulk.min_component_area},
                 {"boundary_sample_step_px", bulk.boundary_sample_step},
                 {"max_edge_um", bulk.max_edge_um},
                 {"post_fill", bulk.post_fill}};
    j["score"] = {{"a_til_um2", score.a_til_um2}};
    j["metrics"] = {{"hit_radius_um", metrics.hit_radius_um},
                    {"froc_targets", metrics.froc_targets}};
    return j.dump(2) + "\n";
}

void PipelineConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot write " + path);
    out << to_json_text();
}

} // namespace tiager
