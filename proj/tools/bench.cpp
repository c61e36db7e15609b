// Throughput comparison of the OpenMP kernels against the serial
// reference implementations on synthetic data.

#include <chrono>
#include <cstdio>
#include <random>

#include <omp.h>

#include "tiager/detection.hpp"
#include "tiager/raster.hpp"
#include "tiager/serial_ref.hpp"
#include "tiager/tiling.hpp"

using namespace tiager;
using Clock = std::chrono::steady_clock;

namespace {

double seconds(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

Raster random_mask(int w, int h, std::mt19937& rng, double density = 0.4) {
    Raster m(w, h, SEG_LEVEL, 0.0, RasterKind::Mask);
    std::bernoulli_distribution bit(density);
    for (double& v : m.pixels()) v = bit(rng) ? 1.0 : 0.0;
    return m;
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        f();
        best = std::min(best, seconds(t0, Clock::now()));
    }
    return best;
}

} // namespace

int main() {
    std::mt19937 rng(12345);
    std::printf("threads: %d\n\n", omp_get_max_threads());
    std::printf("%-28s %10s %10s %8s\n", "kernel", "serial(s)", "parallel", "speedup");

    {
        const Raster m = random_mask(1024, 1024, rng);
        const double ts = time_best_of(3, [&] { serial::morph(m, MorphOp::Open, 5); });
        const double tp = time_best_of(3, [&] { morph(m, MorphOp::Open, 5); });
        std::printf("%-28s %10.4f %10.4f %7.2fx\n", "morph open r=5 1024^2", ts, tp,
                    ts / tp);
    }
    {
        const Raster m = random_mask(1024, 1024, rng);
        const double ts =
            time_best_of(3, [&] { serial::connected_components(m, 8); });
        const double tp = time_best_of(3, [&] { connected_components(m, 8); });
        std::printf("%-28s %10.4f %10.4f %7.2fx\n", "connected components 1024^2",
                    ts, tp, ts / tp);
    }
    {
        const TilePlan plan = plan_tiles(2048, 2048, 512, 256, 128);
        std::vector<std::pair<TileCoord, Raster>> patches;
        std::uniform_real_distribution<double> uni(0, 1);
        for (const TileCoord& c : plan.coords) {
            Raster p(c.w, c.h, SEG_LEVEL);
            for (double& v : p.pixels()) v = uni(rng);
            patches.emplace_back(c, std::move(p));
        }
        const double ts =
            time_best_of(3, [&] { serial::stitch(patches, plan); });
        const double tp = time_best_of(3, [&] { stitch(patches, plan); });
        std::printf("%-28s %10.4f %10.4f %7.2fx\n", "stitch 2048^2 (512/256/128)",
                    ts, tp, ts / tp);
    }
    {
        std::vector<Detection> dets;
        std::uniform_real_distribution<double> pos(0, 5000);
        std::uniform_real_distribution<double> conf(0, 1);
        for (int i = 0; i < 20000; ++i)
            dets.push_back({pos(rng), pos(rng), conf(rng)});
        const double ts = time_best_of(3, [&] { serial::nms(dets, 8.0); });
        const double tp = time_best_of(3, [&] { nms(dets, 8.0); });
        std::printf("%-28s %10.4f %10.4f %7.2fx\n", "nms 20k dets (grid vs n^2)",
                    ts, tp, ts / tp);
    }
    return 0;
}
