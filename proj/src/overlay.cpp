#include "tiager/overlay.hpp"

#include <algorithm>
#include <cmath>

namespace tiager {

namespace {

constexpr uint8_t TUMOUR_RGB[3] = {220, 40, 40};
constexpr uint8_t STROMA_RGB[3] = {40, 160, 60};
constexpr uint8_t BULK_RGB[3] = {50, 90, 220};
constexpr uint8_t TAS_RGB[3] = {240, 220, 60};
constexpr uint8_t DET_RGB[3] = {150, 30, 200};

bool is_contour(const Raster& mask, int x, int y) {
    if (mask.get(x, y) == 0.0) return false;
    return mask.get(x - 1, y) == 0.0 || mask.get(x + 1, y) == 0.0 ||
           mask.get(x, y - 1) == 0.0 || mask.get(x, y + 1) == 0.0;
}

void draw_contours(RgbImage& img, const Raster& mask, const uint8_t rgb[3]) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (is_contour(mask, x, y)) {
                uint8_t* p = img.at(x, y);
                p[0] = rgb[0];
                p[1] = rgb[1];
                p[2] = rgb[2];
            }
}

void draw_circle(RgbImage& img, int cx, int cy, int r, const uint8_t rgb[3]) {
    // Midpoint circle.
    int x = r, y = 0, err = 1 - r;
    auto plot = [&](int px, int py) {
        if (px < 0 || py < 0 || px >= img.width || py >= img.height) return;
        uint8_t* p = img.at(px, py);
        p[0] = rgb[0];
        p[1] = rgb[1];
        p[2] = rgb[2];
    };
    while (x >= y) {
        plot(cx + x, cy + y); plot(cx - x, cy + y);
        plot(cx + x, cy - y); plot(cx - x, cy - y);
        plot(cx + y, cy + x); plot(cx - y, cy + x);
        plot(cx + y, cy - x); plot(cx - y, cy - x);
        ++y;
        if (err < 0) {
            err += 2 * y + 1;
        } else {
            --x;
            err += 2 * (y - x) + 1;
        }
    }
    if (r == 0) plot(cx, cy);
}

} // namespace

void render_overlay(const Raster& thumb, const Raster& tumour,
                    const Raster& stroma, const Raster& bulk, const Raster& tas,
                    const std::vector<Detection>& detections,
                    const std::string& path) {
    for (const Raster* m : {&tumour, &stroma, &bulk, &tas})
        if (m->width() != thumb.width() || m->height() != thumb.height())
            throw InvalidInputError("render_overlay: raster frames disagree");

    RgbImage img(thumb.width(), thumb.height());
    for (int y = 0; y < thumb.height(); ++y)
        for (int x = 0; x < thumb.width(); ++x) {
            const uint8_t v = static_cast<uint8_t>(
                std::lround(std::clamp(thumb.at(x, y), 0.0, 1.0) * 255.0));
            uint8_t* p = img.at(x, y);
            p[0] = p[1] = p[2] = v;
            if (tas.at(x, y) != 0.0) { // 40% shade
                p[0] = static_cast<uint8_t>((p[0] * 3 + TAS_RGB[0] * 2) / 5);
                p[1] = static_cast<uint8_t>((p[1] * 3 + TAS_RGB[1] * 2) / 5);
                p[2] = static_cast<uint8_t>((p[2] * 3 + TAS_RGB[2] * 2) / 5);
            }
        }
    draw_contours(img, bulk, BULK_RGB);
    draw_contours(img, stroma, STROMA_RGB);
    draw_contours(img, tumour, TUMOUR_RGB);
    for (const Detection& d : detections) {
        const long px = thumb.um_to_px_x(d.x_um);
        const long py = thumb.um_to_px_y(d.y_um);
        draw_circle(img, static_cast<int>(px), static_cast<int>(py), 3, DET_RGB);
    }
    write_png_rgb(img, path);
}

} // namespace tiager
