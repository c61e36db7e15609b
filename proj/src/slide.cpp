#include "tiager/slide.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tiager/png_io.hpp"

namespace tiager {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

Raster window_copy(const Raster& src, long x, long y, int w, int h) {
    Raster out(w, h, src.resolution(), 0.0, src.kind());
    out.set_origin(src.origin_x() + x, src.origin_y() + y);
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < h; ++oy) {
        double* orow = out.row(oy);
        for (int ox = 0; ox < w; ++ox)
            orow[ox] = src.get(x + ox, y + oy);
    }
    return out;
}

} // namespace

MemorySource::MemorySource(Raster base) : base_(std::move(base)) {}

const Raster& MemorySource::level_for(Resolution res) const {
    if (res == base_.resolution()) return base_;
    std::lock_guard lock(mutex_);
    auto it = cache_.find(res.mpp);
    if (it == cache_.end())
        it = cache_.emplace(res.mpp, resample(base_, res)).first;
    return it->second;
}

Raster MemorySource::read(Resolution res, long x, long y, int w, int h) const {
    return window_copy(level_for(res), x, y, w, h);
}

SlideManifest SlideManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("manifest: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("manifest: ") + e.what());
    }
    SlideManifest m;
    m.dir = fs::path(path).parent_path().string();
    try {
        m.id = j.at("id");
        m.base_mpp = j.at("base_mpp");
        m.width = j.at("width");
        m.height = j.at("height");
        m.tile_dir = j.at("tile_dir");
        m.tile_size = j.at("tile_size");
        m.levels = j.value("levels", 1);
        if (j.contains("masks"))
            for (auto& [name, ref] : j.at("masks").items())
                m.masks[name] = {ref.at("path"), ref.value("level", 0)};
        m.gt_detections = j.value("gt_detections", "");
    } catch (const json::exception& e) {
        throw ManifestError(std::string("manifest: ") + e.what());
    }
    if (m.base_mpp <= 0) throw ManifestError("manifest: base_mpp must be positive");
    if (m.width <= 0 || m.height <= 0)
        throw ManifestError("manifest: slide dimensions must be positive");
    if (m.tile_size <= 0 || m.levels < 1)
        throw ManifestError("manifest: invalid tile geometry");
    if (!fs::is_directory(m.resolve(m.tile_dir)))
        throw ManifestError("manifest: tile directory missing: " + m.tile_dir);
    for (const auto& [name, ref] : m.masks)
        if (!fs::exists(m.resolve(ref.path)))
            throw ManifestError("manifest: mask file missing: " + ref.path);
    if (!m.gt_detections.empty() && !fs::exists(m.resolve(m.gt_detections)))
        throw ManifestError("manifest: gt_detections file missing");
    return m;
}

void SlideManifest::save(const std::string& path) const {
    json j;
    j["id"] = id;
    j["base_mpp"] = base_mpp;
    j["width"] = width;
    j["height"] = height;
    j["tile_dir"] = tile_dir;
    j["tile_size"] = tile_size;
    j["levels"] = levels;
    json masks_j = json::object();
    for (const auto& [name, ref] : masks)
        masks_j[name] = {{"path", ref.path}, {"level", ref.level}};
    j["masks"] = masks_j;
    if (!gt_detections.empty()) j["gt_detections"] = gt_detections;
    std::ofstream out(path);
    if (!out) throw IoError("manifest: cannot write " + path);
    out << j.dump(2) << "\n";
}

std::string SlideManifest::resolve(const std::string& rel) const {
    fs::path p(rel);
    if (p.is_absolute()) return rel;
    return (fs::path(dir) / p).string();
}

SlideReader::SlideReader(SlideManifest manifest) : manifest_(std::move(manifest)) {}

long SlideReader::level_width(int level) const {
    long w = manifest_.width;
    for (int i = 0; i < level; ++i) w = (w + 1) / 2;
    return w;
}

long SlideReader::level_height(int level) const {
    long h = manifest_.height;
    for (int i = 0; i < level; ++i) h = (h + 1) / 2;
    return h;
}

int SlideReader::level_for(Resolution res) const {
    // Finest stored level whose mpp does not exceed the request.
    int best = 0;
    for (int l = 0; l < manifest_.levels; ++l)
        if (manifest_.level_resolution(l).mpp <= res.mpp * (1 + 1e-9)) best = l;
    return best;
}

const Raster& SlideReader::tile(int level, long col, long row) const {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(level, col, row);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        const std::string name = "L" + std::to_string(level) + "_X" +
                                 std::to_string(col) + "_Y" + std::to_string(row) +
                                 ".png";
        const std::string path =
            (std::filesystem::path(manifest_.resolve(manifest_.tile_dir)) / name)
                .string();
        if (!std::filesystem::exists(path))
            throw IoError("slide: missing tile " + name);
        it = cache_.emplace(key, read_png_gray(path, manifest_.level_resolution(level)))
                 .first;
    }
    return it->second;
}

Raster SlideReader::read(Resolution res, long x, long y, int w, int h) const {
    const int lvl = level_for(res);
    const Resolution lres = manifest_.level_resolution(lvl);
    const double f = res.mpp / lres.mpp;
    if (std::abs(f - std::round(f)) > 1e-9 || f < 1.0 - 1e-9)
        throw ManifestError("slide: resolution not reachable from stored levels");
    const long fi = static_cast<long>(std::round(f));

    const long lx = x * fi, ly = y * fi;
    const int lw = static_cast<int>(w * fi), lh = static_cast<int>(h * fi);
    Raster window(lw, lh, lres);
    window.set_origin(lx, ly);

    const int ts = manifest_.tile_size;
    const long lvl_w = level_width(lvl), lvl_h = level_height(lvl);
    const long col0 = std::max(0L, lx / ts);
    const long row0 = std::max(0L, ly / ts);
    const long col1 = std::min((lvl_w - 1) / ts, (lx + lw - 1) / ts);
    const long row1 = std::min((lvl_h - 1) / ts, (ly + lh - 1) / ts);
    for (long row = row0; row <= row1 && ly + lh > 0 && lx + lw > 0; ++row) {
        for (long col = col0; col <= col1; ++col) {
            const Raster& t = tile(lvl, col, row);
            const long tx0 = col * ts, ty0 = row * ts;
            const long x0 = std::max(lx, tx0), x1 = std::min(lx + lw, tx0 + t.width());
            const long y0 = std::max(ly, ty0), y1 = std::min(ly + lh, ty0 + t.height());
            for (long yy = y0; yy < y1; ++yy)
                for (long xx = x0; xx < x1; ++xx)
                    window.at(static_cast<int>(xx - lx), static_cast<int>(yy - ly)) =
                        t.at(static_cast<int>(xx - tx0), static_cast<int>(yy - ty0));
        }
    }
    if (fi == 1) return window;
    Raster out = resample(window, res);
    out.set_origin(static_cast<double>(x), static_cast<double>(y));
    return window_copy(out, 0, 0, w, h);
}

Raster load_manifest_mask(const SlideManifest& m, const std::string& name) {
    auto it = m.masks.find(name);
    if (it == m.masks.end())
        throw ManifestError("manifest: no mask named '" + name + "'");
    const Resolution res = m.level_resolution(it->second.level);
    Raster mask = read_png_gray(m.resolve(it->second.path), res, RasterKind::Mask);
    const double f = std::pow(2.0, it->second.level);
    const long want_w = static_cast<long>(std::ceil(m.width / f - 1e-9));
    const long want_h = static_cast<long>(std::ceil(m.height / f - 1e-9));
    if (mask.width() != want_w || mask.height() != want_h)
        throw ManifestError("manifest: mask '" + name + "' dimensions mismatch");
    return mask;
}

} // namespace tiager
