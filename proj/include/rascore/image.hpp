#pragma once

#include <string>
#include <vector>

#include "rascore/common.hpp"

namespace rascore {

/// Single-channel image with intensities in [0,1], row-major.
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int h, int w, double fill = 0.0)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return pixels.size(); }
    bool empty() const { return pixels.empty(); }
};

/// Decodes an 8-bit or 16-bit grayscale PNG/JPEG and scales it to [0,1].
GrayImage load_gray_image(const std::string& path);

/// Writes an 8-bit grayscale PNG (values clamped to [0,1] then quantized).
void save_gray_png(const GrayImage& image, const std::string& path);

/// Bilinear resampling with pixel-center alignment.
GrayImage resize_bilinear(const GrayImage& image, int out_height, int out_width);

}  // namespace rascore
