#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tiager/backend.hpp"
#include "tiager/io.hpp"
#include "tiager/log.hpp"
#include "tiager/metrics.hpp"
#include "tiager/overlay.hpp"
#include "tiager/pipeline.hpp"
#include "tiager/png_io.hpp"

namespace fs = std::filesystem;
using namespace tiager;

namespace {

struct CommonArgs {
    std::string manifest;
    std::string config;
    std::string out;
};

PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return PipelineConfig{};
    return PipelineConfig::load(path);
}

void write_mask(const Raster& mask, const fs::path& dir, const char* name) {
    write_png_gray(mask, (dir / name).string());
}

Raster read_mask(const fs::path& path, Resolution res) {
    if (!fs::exists(path)) throw IoError("missing mask: " + path.string());
    return read_png_gray(path.string(), res, RasterKind::Mask);
}

int cmd_segment(const CommonArgs& a) {
    const SlideManifest manifest = SlideManifest::load(a.manifest);
    const PipelineConfig cfg = load_config(a.config);
    SlideReader reader(manifest);
    const Ensemble seg = make_seg_ensemble(cfg, &manifest);
    const SegMasks masks = run_segmentation(reader, seg, cfg);
    fs::create_directories(a.out);
    write_mask(masks.tumour, a.out, "tumour_mask.png");
    write_mask(masks.stroma, a.out, "stroma_mask.png");
    log::info("segment: wrote masks to " + a.out);
    return 0;
}

int cmd_detect(const CommonArgs& a) {
    const SlideManifest manifest = SlideManifest::load(a.manifest);
    const PipelineConfig cfg = load_config(a.config);
    SlideReader reader(manifest);
    const Ensemble det = make_det_ensemble(cfg, &manifest);
    const Raster prob = run_detection(reader, det, cfg);
    const Raster mask = threshold(prob, cfg.det.threshold);
    const ComponentSet comps = connected_components(mask, cfg.det.connectivity);
    std::vector<Detection> dets =
        components_to_detections(comps, prob, cfg.det.min_area_px);
    dets = nms(std::move(dets), cfg.det.nms_radius_um);
    fs::create_directories(a.out);
    save_detections(dets, (fs::path(a.out) / "detections.json").string());
    log::info("detect: " + std::to_string(dets.size()) + " detections");
    return 0;
}

int cmd_bulk(const CommonArgs& a) {
    const SlideManifest manifest = SlideManifest::load(a.manifest);
    const PipelineConfig cfg = load_config(a.config);
    SlideReader reader(manifest);
    const Ensemble seg = make_seg_ensemble(cfg, &manifest);
    const SegMasks masks = run_segmentation(reader, seg, cfg);
    const Raster bulk = tumour_bulk(masks.tumour, cfg.bulk);
    const Raster tas = tumour_associated_stroma(bulk, masks.stroma);
    fs::create_directories(a.out);
    write_mask(masks.tumour, a.out, "tumour_mask.png");
    write_mask(masks.stroma, a.out, "stroma_mask.png");
    write_mask(bulk, a.out, "bulk_mask.png");
    write_mask(tas, a.out, "tas_mask.png");
    return 0;
}

int cmd_score(const CommonArgs& a) {
    const SlideManifest manifest = SlideManifest::load(a.manifest);
    const PipelineConfig cfg = load_config(a.config);
    SlideReader reader(manifest);
    const Ensemble seg = make_seg_ensemble(cfg, &manifest);
    const Ensemble det = make_det_ensemble(cfg, &manifest);
    const ScoreArtifacts art = score_wsi(reader, seg, det, cfg);
    fs::create_directories(a.out);
    write_mask(art.seg.tumour, a.out, "tumour_mask.png");
    write_mask(art.seg.stroma, a.out, "stroma_mask.png");
    write_mask(art.bulk, a.out, "bulk_mask.png");
    write_mask(art.tas, a.out, "tas_mask.png");
    save_detections(art.detections, (fs::path(a.out) / "detections.json").string());
    save_tils_result(art.result, (fs::path(a.out) / "score.json").string());
    std::cout << tils_result_to_json(art.result);
    return 0;
}

int cmd_evaluate(const CommonArgs& a, const std::string& task,
                 const std::string& pred, const std::string& gt) {
    const PipelineConfig cfg = load_config(a.config);
    nlohmann::json report;
    std::string slide_id = "slide";

    if (task == "dice") {
        Raster gt_t, gt_s;
        if (!gt.empty()) {
            gt_t = read_mask(fs::path(gt) / "tumour_mask.png", SEG_LEVEL);
            gt_s = read_mask(fs::path(gt) / "stroma_mask.png", SEG_LEVEL);
        } else {
            const SlideManifest manifest = SlideManifest::load(a.manifest);
            slide_id = manifest.id;
            gt_t = load_manifest_mask(manifest, "tumour");
            gt_s = load_manifest_mask(manifest, "stroma");
            if (!(gt_t.resolution() == SEG_LEVEL)) gt_t = resample(gt_t, SEG_LEVEL);
            if (!(gt_s.resolution() == SEG_LEVEL)) gt_s = resample(gt_s, SEG_LEVEL);
        }
        const Raster pred_t = read_mask(fs::path(pred) / "tumour_mask.png", SEG_LEVEL);
        const Raster pred_s = read_mask(fs::path(pred) / "stroma_mask.png", SEG_LEVEL);
        const double dt = dice(pred_t, gt_t);
        const double ds = dice(pred_s, gt_s);
        report["per_slide"][slide_id] = {{"dice_tumour", dt},
                                         {"dice_stroma", ds},
                                         {"dice_mean", mean_tumour_stroma_dice(dt, ds)}};
        report["aggregate"] = {{"dice_tumour", dt},
                               {"dice_stroma", ds},
                               {"dice_mean", mean_tumour_stroma_dice(dt, ds)}};
    } else if (task == "froc") {
        const SlideManifest manifest = SlideManifest::load(a.manifest);
        slide_id = manifest.id;
        const std::string gt_path =
            !gt.empty() ? gt : manifest.resolve(manifest.gt_detections);
        if (gt_path.empty()) throw IoError("evaluate: no ground-truth detections");
        std::vector<std::pair<double, double>> gts;
        for (const Detection& d : load_detections(gt_path))
            gts.emplace_back(d.x_um, d.y_um);
        const std::vector<Detection> preds = load_detections(pred);
        const double area_mm2 = static_cast<double>(manifest.width) *
                                manifest.height * manifest.base_mpp *
                                manifest.base_mpp / 1e6;
        const FrocCurve curve = froc(preds, gts, cfg.metrics.hit_radius_um,
                                     area_mm2, cfg.metrics.froc_targets);
        const MatchResult m =
            match_detections(preds, gts, cfg.metrics.hit_radius_um);
        const Prf prf = f1_precision_recall(m);
        nlohmann::json block = {{"froc", curve.score},
                                {"f1", prf.f1},
                                {"recall", prf.recall},
                                {"precision", prf.precision},
                                {"tp", m.tp},
                                {"fp", m.fp},
                                {"fn", m.fn}};
        report["per_slide"][slide_id] = block;
        report["aggregate"] = block;
    } else if (task == "tils") {
        const std::vector<double> xs = load_number_array(pred);
        const std::vector<double> ys = load_number_array(gt);
        report["aggregate"] = {{"pearson_r", pearson(xs, ys)},
                               {"n", xs.size()}};
    } else {
        throw InvalidInputError("evaluate: unknown task '" + task + "'");
    }

    const std::string text = report.dump(2) + "\n";
    if (!a.out.empty()) {
        std::ofstream out(a.out);
        if (!out) throw IoError("evaluate: cannot write " + a.out);
        out << text;
    }
    std::cout << text;
    return 0;
}

int cmd_render(const CommonArgs& a, const std::string& pred) {
    const SlideManifest manifest = SlideManifest::load(a.manifest);
    SlideReader reader(manifest);

    // Pick a power-of-two thumbnail level with max dimension <= 1024.
    double mpp = SEG_LEVEL.mpp;
    while (std::max(reader.width_at(Resolution{mpp}),
                    reader.height_at(Resolution{mpp})) > 1024)
        mpp *= 2.0;
    const Resolution thumb_res{mpp};
    const Raster thumb =
        reader.read(thumb_res, 0, 0, static_cast<int>(reader.width_at(thumb_res)),
                    static_cast<int>(reader.height_at(thumb_res)));

    auto mask_at_thumb = [&](const char* name) {
        const fs::path p = fs::path(pred) / name;
        if (!fs::exists(p))
            return Raster(thumb.width(), thumb.height(), thumb_res, 0.0,
                          RasterKind::Mask);
        Raster m = read_mask(p, SEG_LEVEL);
        if (!(thumb_res == SEG_LEVEL)) m = resample(m, thumb_res);
        // Resampling can differ by a pixel from the thumbnail grid.
        Raster fit(thumb.width(), thumb.height(), thumb_res, 0.0, RasterKind::Mask);
        for (int y = 0; y < fit.height(); ++y)
            for (int x = 0; x < fit.width(); ++x)
                fit.at(x, y) = m.get(x, y);
        return fit;
    };
    const Raster tumour = mask_at_thumb("tumour_mask.png");
    const Raster stroma = mask_at_thumb("stroma_mask.png");
    const Raster bulk = mask_at_thumb("bulk_mask.png");
    const Raster tas = mask_at_thumb("tas_mask.png");
    std::vector<Detection> dets;
    const fs::path det_path = fs::path(pred) / "detections.json";
    if (fs::exists(det_path)) dets = load_detections(det_path.string());

    render_overlay(thumb, tumour, stroma, bulk, tas, dets, a.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TILs scoring pipeline for tiled whole-slide images"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string task = "dice", pred, gt;

    auto add_common = [&](CLI::App* sub, bool need_manifest = true) {
        if (need_manifest)
            sub->add_option("--manifest", args.manifest, "slide manifest JSON")
                ->required();
        else
            sub->add_option("--manifest", args.manifest, "slide manifest JSON");
        sub->add_option("--config", args.config, "pipeline config JSON");
        sub->add_option("--out", args.out, "output path")->required();
    };

    CLI::App* seg = app.add_subcommand("segment", "tumour/stroma segmentation");
    add_common(seg);
    CLI::App* det = app.add_subcommand("detect", "TIL detection");
    add_common(det);
    CLI::App* blk = app.add_subcommand("bulk", "tumour bulk and TAS masks");
    add_common(blk);
    CLI::App* sco = app.add_subcommand("score", "full TILs scoring pipeline");
    add_common(sco);
    CLI::App* eva = app.add_subcommand("evaluate", "metric evaluation");
    add_common(eva, false);
    eva->add_option("--task", task, "dice|froc|tils");
    eva->add_option("--pred", pred, "predictions (dir or file)")->required();
    eva->add_option("--gt", gt, "ground truth (dir or file)");
    CLI::App* ren = app.add_subcommand("render", "overlay rendering");
    add_common(ren);
    ren->add_option("--pred", pred, "directory with pipeline outputs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (seg->parsed()) return cmd_segment(args);
        if (det->parsed()) return cmd_detect(args);
        if (blk->parsed()) return cmd_bulk(args);
        if (sco->parsed()) return cmd_score(args);
        if (eva->parsed()) return cmd_evaluate(args, task, pred, gt);
        if (ren->parsed()) return cmd_render(args, pred);
    } catch (const std::exception& e) {
        log::error(e.what());
        return 1;
    }
    return 2;
}
