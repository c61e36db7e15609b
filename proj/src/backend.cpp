#include "tiager/backend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numeric>

#include <omp.h>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "tiager/tiling.hpp"

namespace tiager {

// ---------------------------------------------------------------------------
// Passthrough

PassthroughBackend::PassthroughBackend(std::shared_ptr<const Raster> tumour,
                                       std::shared_ptr<const Raster> stroma,
                                       int patch_size)
    : flavor_(BackendFlavor::Segmentation), patch_size_(patch_size),
      res_(tumour->resolution()), tumour_(std::move(tumour)),
      stroma_(std::move(stroma)) {}

PassthroughBackend::PassthroughBackend(std::shared_ptr<const Raster> til,
                                       int patch_size)
    : flavor_(BackendFlavor::Detection), patch_size_(patch_size),
      res_(til->resolution()), til_(std::move(til)) {}

namespace {

Raster window_of(const Raster& gt, const Raster& patch) {
    const long x0 = static_cast<long>(std::llround(patch.origin_x()));
    const long y0 = static_cast<long>(std::llround(patch.origin_y()));
    Raster out(patch.width(), patch.height(), patch.resolution());
    out.set_origin(patch.origin_x(), patch.origin_y());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            out.at(x, y) = gt.get(x0 + x, y0 + y);
    return out;
}

} // namespace

std::vector<Raster> PassthroughBackend::infer(const Raster& patch) const {
    if (flavor_ == BackendFlavor::Detection) return {window_of(*til_, patch)};
    Raster t = window_of(*tumour_, patch);
    Raster s = window_of(*stroma_, patch);
    Raster other(patch.width(), patch.height(), patch.resolution());
    other.set_origin(patch.origin_x(), patch.origin_y());
    for (size_t i = 0; i < other.size(); ++i)
        other.pixels()[i] =
            std::max(0.0, 1.0 - t.pixels()[i] - s.pixels()[i]);
    return {std::move(t), std::move(s), std::move(other)};
}

// ---------------------------------------------------------------------------
// Luminance bands

LuminanceBackend::LuminanceBackend(BackendFlavor flavor, int patch_size,
                                   Resolution res, double dark_cut,
                                   double light_cut)
    : flavor_(flavor), patch_size_(patch_size), res_(res), dark_cut_(dark_cut),
      light_cut_(light_cut) {}

std::vector<Raster> LuminanceBackend::infer(const Raster& patch) const {
    auto blank = [&] {
        Raster r(patch.width(), patch.height(), patch.resolution());
        r.set_origin(patch.origin_x(), patch.origin_y());
        return r;
    };
    if (flavor_ == BackendFlavor::Detection) {
        Raster til = blank();
        for (size_t i = 0; i < patch.size(); ++i)
            til.pixels()[i] = patch.pixels()[i] < dark_cut_ ? 1.0 : 0.0;
        return {std::move(til)};
    }
    Raster t = blank(), s = blank(), o = blank();
    for (size_t i = 0; i < patch.size(); ++i) {
        const double v = patch.pixels()[i];
        if (v < dark_cut_)
            t.pixels()[i] = 1.0;
        else if (v < light_cut_)
            s.pixels()[i] = 1.0;
        else
            o.pixels()[i] = 1.0;
    }
    return {std::move(t), std::move(s), std::move(o)};
}

// ---------------------------------------------------------------------------
// External subprocess

ExternalBackend::ExternalBackend(std::string command, BackendFlavor flavor,
                                 int patch_size, Resolution res)
    : command_(std::move(command)), flavor_(flavor), patch_size_(patch_size),
      res_(res) {}

ExternalBackend::~ExternalBackend() {
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    if (pid_ > 0) {
        kill(static_cast<pid_t>(pid_), SIGTERM);
        int status = 0;
        waitpid(static_cast<pid_t>(pid_), &status, 0);
    }
}

void ExternalBackend::launch() const {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
        throw BackendError("external backend: pipe failed");
    const pid_t pid = fork();
    if (pid < 0) throw BackendError("external backend: fork failed");
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), nullptr);
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    pid_ = pid;
}

namespace {

void write_all(int fd, const void* data, size_t n) {
    const char* p = static_cast<const char*>(data);
    while (n > 0) {
        const ssize_t k = write(fd, p, n);
        if (k <= 0) throw BackendError("external backend: write failed");
        p += k;
        n -= static_cast<size_t>(k);
    }
}

void read_all(int fd, void* data, size_t n) {
    char* p = static_cast<char*>(data);
    while (n > 0) {
        const ssize_t k = read(fd, p, n);
        if (k <= 0) throw BackendError("external backend: read failed (subprocess exited?)");
        p += k;
        n -= static_cast<size_t>(k);
    }
}

} // namespace

std::vector<Raster> ExternalBackend::infer(const Raster& patch) const {
    std::lock_guard lock(mutex_);
    if (pid_ < 0) launch();

    const size_t n = patch.size();
    std::vector<float> payload(n);
    for (size_t i = 0; i < n; ++i)
        payload[i] = static_cast<float>(patch.pixels()[i]);
    const uint32_t len = static_cast<uint32_t>(n * sizeof(float));
    uint8_t hdr[4] = {static_cast<uint8_t>(len), static_cast<uint8_t>(len >> 8),
                      static_cast<uint8_t>(len >> 16),
                      static_cast<uint8_t>(len >> 24)};
    write_all(in_fd_, hdr, 4);
    write_all(in_fd_, payload.data(), len);

    uint8_t rhdr[4];
    read_all(out_fd_, rhdr, 4);
    const uint32_t rlen = static_cast<uint32_t>(rhdr[0]) |
                          (static_cast<uint32_t>(rhdr[1]) << 8) |
                          (static_cast<uint32_t>(rhdr[2]) << 16) |
                          (static_cast<uint32_t>(rhdr[3]) << 24);
    const size_t classes = flavor_ == BackendFlavor::Segmentation ? 3 : 1;
    if (rlen != classes * n * sizeof(float))
        throw BackendError("external backend: unexpected response length");
    std::vector<float> resp(classes * n);
    read_all(out_fd_, resp.data(), rlen);

    std::vector<Raster> out;
    for (size_t c = 0; c < classes; ++c) {
        Raster r(patch.width(), patch.height(), patch.resolution());
        r.set_origin(patch.origin_x(), patch.origin_y());
        for (size_t i = 0; i < n; ++i)
            r.pixels()[i] = resp[c * n + i];
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ensemble machinery

BackendFlavor Ensemble::flavor() const {
    if (members.empty()) throw InvalidInputError("ensemble: no members");
    return members.front()->flavor();
}

void Ensemble::validate() const {
    if (members.empty()) throw InvalidInputError("ensemble: no members");
    for (const auto& m : members) {
        if (m->flavor() != members.front()->flavor() ||
            m->patch_size() != members.front()->patch_size() ||
            !(m->input_resolution() == members.front()->input_resolution()))
            throw InvalidInputError("ensemble: members disagree on flavor/geometry");
    }
}

Raster ensemble_average(const std::vector<Raster>& outputs) {
    if (outputs.empty())
        throw InvalidInputError("ensemble_average: no rasters");
    for (const Raster& r : outputs)
        if (r.width() != outputs.front().width() ||
            r.height() != outputs.front().height())
            throw InvalidInputError("ensemble_average: shape mismatch");
    if (outputs.size() == 1) return outputs.front();

    // Canonicalize: sort members lexicographically by pixel data and
    // collapse exact duplicates into integer weights reduced by their gcd.
    // This makes the mean bit-identical under member permutation and
    // under duplicating the whole member list.
    std::vector<const Raster*> sorted;
    for (const Raster& r : outputs) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const Raster* a, const Raster* b) {
        return std::lexicographical_compare(a->pixels().begin(), a->pixels().end(),
                                            b->pixels().begin(), b->pixels().end());
    });
    std::vector<std::pair<const Raster*, long>> weighted;
    for (const Raster* r : sorted) {
        if (!weighted.empty() && weighted.back().first->pixels().size() == r->pixels().size() &&
            std::equal(weighted.back().first->pixels().begin(),
                       weighted.back().first->pixels().end(), r->pixels().begin()))
            ++weighted.back().second;
        else
            weighted.emplace_back(r, 1);
    }
    long g = 0;
    for (const auto& [_, w] : weighted) g = std::gcd(g, w);
    long total = 0;
    for (auto& [_, w] : weighted) {
        w /= g;
        total += w;
    }
    if (total == 1) return *weighted.front().first;

    const Raster& front = outputs.front();
    Raster out(front.width(), front.height(), front.resolution());
    out.set_origin(front.origin_x(), front.origin_y());
    const size_t n = out.size();
    auto acc = out.pixels();
    for (const auto& [r, w] : weighted) {
        auto src = r->pixels();
        const double wd = static_cast<double>(w);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(n); ++i)
            acc[i] += wd * src[i];
    }
    const double td = static_cast<double>(total);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i)
        acc[i] /= td;
    return out;
}

Raster threshold(const Raster& prob, double t) {
    if (t < 0.0 || t > 1.0)
        throw InvalidInputError("threshold: t must be in [0,1]");
    Raster out(prob.width(), prob.height(), prob.resolution(), 0.0, RasterKind::Mask);
    out.set_origin(prob.origin_x(), prob.origin_y());
    const size_t n = prob.size();
    auto src = prob.pixels();
    auto dst = out.pixels();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i)
        dst[i] = src[i] >= t ? 1.0 : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Full-slide passes

namespace {

int effective_workers(const PipelineConfig& cfg) {
    return cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
}

std::vector<Raster> invoke(const SegmentationBackend& b, const Raster& patch,
                           std::mutex& serialize) {
    if (b.thread_safe()) return b.infer(patch);
    std::lock_guard lock(serialize);
    return b.infer(patch);
}

} // namespace

SegMasks run_segmentation(const RasterSource& wsi, const Ensemble& ensemble,
                          const PipelineConfig& cfg) {
    ensemble.validate();
    if (ensemble.flavor() != BackendFlavor::Segmentation)
        throw InvalidInputError("run_segmentation: ensemble is not segmentation-flavored");
    const long W = wsi.width_at(SEG_LEVEL);
    const long H = wsi.height_at(SEG_LEVEL);
    const TilePlan plan =
        plan_tiles(W, H, cfg.seg.patch, cfg.seg.stride, cfg.seg.pad);
    const int crop = cfg.seg.stride; // crops partition the canvas

    const size_t n_tiles = plan.coords.size();
    std::vector<std::array<Raster, 3>> crops(n_tiles);
    std::string error;
    std::mutex serialize, err_mutex;

#pragma omp parallel for schedule(dynamic) num_threads(effective_workers(cfg))
    for (long i = 0; i < static_cast<long>(n_tiles); ++i) {
        const TileCoord& c = plan.coords[i];
        try {
            const Raster patch = wsi.read(SEG_LEVEL, c.x - cfg.seg.pad,
                                          c.y - cfg.seg.pad, c.w, c.h);
            std::vector<Raster> per_class[3];
            for (const auto& member : ensemble.members) {
                std::vector<Raster> outs = invoke(*member, patch, serialize);
                if (outs.size() != 3)
                    throw BackendError("segmentation backend returned wrong class count");
                for (int k = 0; k < 3; ++k)
                    per_class[k].push_back(std::move(outs[k]));
            }
            for (int k = 0; k < 3; ++k)
                crops[i][k] = central_crop(ensemble_average(per_class[k]), crop, crop);
        } catch (const std::exception& e) {
            std::lock_guard lock(err_mutex);
            if (error.empty())
                error = "tile (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                        "): " + e.what();
        }
    }
    if (!error.empty()) throw BackendError("run_segmentation: " + error);

    auto stitched = [&](int k) {
        std::vector<std::pair<TileCoord, Raster>> pieces;
        pieces.reserve(n_tiles);
        for (size_t i = 0; i < n_tiles; ++i)
            pieces.emplace_back(plan.coords[i], std::move(crops[i][k]));
        return stitch(pieces, plan, StitchMode::Average);
    };
    Raster tumour_prob = stitched(static_cast<int>(SegClass::Tumour));
    Raster stroma_prob = stitched(static_cast<int>(SegClass::Stroma));

    SegMasks out;
    out.tumour = morph(threshold(tumour_prob, cfg.seg.threshold_tumour),
                       MorphOp::Open, cfg.seg.open_radius_px);
    out.stroma = threshold(stroma_prob, cfg.seg.threshold_stroma);
    return out;
}

Raster run_detection(const RasterSource& wsi, const Ensemble& ensemble,
                     const PipelineConfig& cfg, const Raster* roi) {
    ensemble.validate();
    if (ensemble.flavor() != BackendFlavor::Detection)
        throw InvalidInputError("run_detection: ensemble is not detection-flavored");
    const long W = wsi.width_at(DET_LEVEL);
    const long H = wsi.height_at(DET_LEVEL);
    if (roi && (roi->width() != W || roi->height() != H))
        throw InvalidInputError("run_detection: ROI mask shape mismatch");

    const TilePlan outer = plan_tiles(W, H, cfg.det.tile, cfg.det.tile, 0);
    const StitchMode mode =
        cfg.det.stitch_max ? StitchMode::Max : StitchMode::Average;
    const size_t n_tiles = outer.coords.size();
    std::vector<Raster> tiles(n_tiles);
    std::string error;
    std::mutex serialize, err_mutex;

#pragma omp parallel for schedule(dynamic) num_threads(effective_workers(cfg))
    for (long i = 0; i < static_cast<long>(n_tiles); ++i) {
        const TileCoord& c = outer.coords[i];
        try {
            bool active = roi == nullptr;
            if (roi) {
                for (long y = c.y; y < c.y + c.h && !active; ++y)
                    for (long x = c.x; x < c.x + c.w; ++x)
                        if (roi->get(x, y) != 0.0) { active = true; break; }
            }
            if (!active) {
                Raster zero(c.w, c.h, DET_LEVEL);
                zero.set_origin(static_cast<double>(c.x), static_cast<double>(c.y));
                tiles[i] = std::move(zero);
                continue;
            }
            const Raster tile_px = wsi.read(DET_LEVEL, c.x, c.y, c.w, c.h);
            const TilePlan inner =
                plan_tiles(c.w, c.h, cfg.det.patch, cfg.det.stride, 0);
            std::vector<std::pair<TileCoord, Raster>> pieces;
            pieces.reserve(inner.coords.size());
            for (const TileCoord& ic : inner.coords) {
                const Raster patch = extract_patch(tile_px, ic, 0);
                std::vector<Raster> outs;
                for (const auto& member : ensemble.members) {
                    std::vector<Raster> r = invoke(*member, patch, serialize);
                    if (r.size() != 1)
                        throw BackendError("detection backend returned wrong class count");
                    outs.push_back(std::move(r.front()));
                }
                pieces.emplace_back(ic, ensemble_average(outs));
            }
            Raster stitched = stitch(pieces, inner, mode);
            stitched.set_origin(static_cast<double>(c.x), static_cast<double>(c.y));
            tiles[i] = std::move(stitched);
        } catch (const std::exception& e) {
            std::lock_guard lock(err_mutex);
            if (error.empty())
                error = "tile (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                        "): " + e.what();
        }
    }
    if (!error.empty()) throw BackendError("run_detection: " + error);

    std::vector<std::pair<TileCoord, Raster>> pieces;
    pieces.reserve(n_tiles);
    for (size_t i = 0; i < n_tiles; ++i)
        pieces.emplace_back(outer.coords[i], std::move(tiles[i]));
    Raster prob = stitch(pieces, outer, StitchMode::Average);
    prob.set_origin(0.0, 0.0);
    return prob;
}

// ---------------------------------------------------------------------------
// Ensemble construction from config

namespace {

std::shared_ptr<SegmentationBackend> make_backend(const PipelineConfig& cfg,
                                                  const SlideManifest* manifest,
                                                  BackendFlavor flavor) {
    const int patch = flavor == BackendFlavor::Segmentation ? cfg.seg.patch
                                                            : cfg.det.patch;
    const Resolution res =
        flavor == BackendFlavor::Segmentation ? SEG_LEVEL : DET_LEVEL;
    switch (cfg.backend) {
    case BackendKind::Luminance:
        return std::make_shared<LuminanceBackend>(flavor, patch, res);
    case BackendKind::External:
        return std::make_shared<ExternalBackend>(cfg.external_command, flavor,
                                                 patch, res);
    case BackendKind::Passthrough: {
        if (!manifest)
            throw InvalidInputError("passthrough backend requires a slide manifest");
        auto load_at = [&](const std::string& name, Resolution target) {
            Raster m = load_manifest_mask(*manifest, name);
            if (!(m.resolution() == target)) m = resample(m, target);
            return std::make_shared<const Raster>(std::move(m));
        };
        if (flavor == BackendFlavor::Segmentation)
            return std::make_shared<PassthroughBackend>(
                load_at("tumour", SEG_LEVEL), load_at("stroma", SEG_LEVEL), patch);
        return std::make_shared<PassthroughBackend>(load_at("til", DET_LEVEL),
                                                    patch);
    }
    }
    throw InvalidInputError("unknown backend kind");
}

} // namespace

Ensemble make_seg_ensemble(const PipelineConfig& cfg, const SlideManifest* manifest) {
    Ensemble e;
    auto b = make_backend(cfg, manifest, BackendFlavor::Segmentation);
    for (int i = 0; i < cfg.seg.ensemble; ++i) e.members.push_back(b);
    return e;
}

Ensemble make_det_ensemble(const PipelineConfig& cfg, const SlideManifest* manifest) {
    Ensemble e;
    auto b = make_backend(cfg, manifest, BackendFlavor::Detection);
    for (int i = 0; i < cfg.det.ensemble; ++i) e.members.push_back(b);
    return e;
}

} // namespace tiager
