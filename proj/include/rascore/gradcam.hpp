#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rascore/image.hpp"
#include "rascore/model.hpp"

namespace rascore {

/// Rectified, gradient-weighted channel sum of the final activation map,
/// upsampled to the input resolution. `values` is normalized to [0,1] by the
/// per-image maximum when that maximum is positive; an all-zero map stays
/// all-zero.
struct Heatmap {
    GrayImage values;
    int source_height = 0;  // feature-map spatial size before upsampling
    int source_width = 0;
    double raw_max = 0.0;   // pre-normalization maximum
};

/// Differentiation target: the scalar regression output, or the logit of one
/// class.
struct CamTarget {
    static CamTarget regression_output() { return {}; }
    static CamTarget class_logit(int klass) { return {klass}; }
    std::optional<int> klass;
};

/// Grad-CAM over a preprocessed batch (N,1,H,W). Channel weights are the
/// spatial averages of d(target)/d(activation); the heatmap is the rectified
/// weighted channel sum. One heatmap per sample.
std::vector<Heatmap> grad_cam(Model& model, const Tensor& batch, const CamTarget& target);

/// Single-image convenience wrapper.
Heatmap grad_cam_single(Model& model, const GrayImage& preprocessed, const CamTarget& target);

/// Color-mapped heatmap alpha-blended over the grayscale radiograph and
/// written as PNG. The blend weight is alpha * heat per pixel, so a zero
/// heatmap reproduces the radiograph exactly.
void render_overlay(const GrayImage& image, const Heatmap& heatmap, const std::string& out_path,
                    double alpha = 0.5);

}  // namespace rascore
