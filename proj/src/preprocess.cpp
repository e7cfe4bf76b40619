#include "rascore/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace rascore {

void validate_policy(const AugmentPolicy& policy) {
    if (policy.horizontal_flip_prob < 0.0 || policy.horizontal_flip_prob > 1.0) {
        throw ConfigError("horizontal_flip_prob must be in [0,1]");
    }
    if (!(policy.intensity_low <= policy.intensity_high)) {
        throw ConfigError("intensity scale range must satisfy low <= high");
    }
    if (policy.target_size < 16) throw ConfigError("target_size must be at least 16");
}

AugmentDraw draw_augmentation(const AugmentPolicy& policy, Rng& rng) {
    validate_policy(policy);
    AugmentDraw draw;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    draw.flip = unit(rng) < policy.horizontal_flip_prob;
    std::uniform_real_distribution<double> scale(policy.intensity_low, policy.intensity_high);
    draw.intensity_scale = scale(rng);
    std::uniform_int_distribution<int> quarter(0, 3);
    draw.quarter_turns = quarter(rng);
    return draw;
}

GrayImage flip_horizontal(const GrayImage& image) {
    GrayImage out(image.height, image.width);
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) out.at(r, c) = image.at(r, image.width - 1 - c);
    }
    return out;
}

GrayImage rotate_quarter(const GrayImage& image, int quarter_turns) {
    const int k = ((quarter_turns % 4) + 4) % 4;
    if (k == 0) return image;
    if (k == 2) {
        GrayImage out(image.height, image.width);
        for (int r = 0; r < image.height; ++r) {
            for (int c = 0; c < image.width; ++c) {
                out.at(r, c) = image.at(image.height - 1 - r, image.width - 1 - c);
            }
        }
        return out;
    }
    // 90 degrees counter-clockwise: out(r,c) = in(c, W-1-r); 270 is its inverse.
    GrayImage out(image.width, image.height);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            if (k == 1) {
                out.at(r, c) = image.at(c, image.width - 1 - r);
            } else {
                out.at(r, c) = image.at(image.height - 1 - c, r);
            }
        }
    }
    return out;
}

GrayImage scale_intensity(const GrayImage& image, double scale) {
    GrayImage out(image.height, image.width);
    for (std::size_t i = 0; i < image.size(); ++i) {
        out.pixels[i] = std::clamp(image.pixels[i] * scale, 0.0, 1.0);
    }
    return out;
}

Stats compute_pixel_stats(const std::vector<GrayImage>& train_images, int target_size) {
    if (train_images.empty()) throw ValidationError("pixel statistics require training images");
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const GrayImage& image : train_images) {
        const GrayImage resized = resize_bilinear(image, target_size, target_size);
        for (double v : resized.pixels) {
            sum += v;
            sq += v * v;
        }
        count += resized.size();
    }
    const double mean = sum / static_cast<double>(count);
    double var = sq / static_cast<double>(count) - mean * mean;
    if (var < 1e-15) throw ValidationError("training pixels have zero variance");
    return {mean, std::sqrt(var)};
}

namespace {

GrayImage normalize(const GrayImage& image, const Stats& stats) {
    if (stats.sd <= 0.0) throw ConfigError("pixel normalization requires sd > 0");
    GrayImage out(image.height, image.width);
    for (std::size_t i = 0; i < image.size(); ++i) {
        out.pixels[i] = (image.pixels[i] - stats.mean) / stats.sd;
    }
    return out;
}

void require_nonempty(const GrayImage& image) {
    if (image.empty() || image.height <= 0 || image.width <= 0) {
        throw ValidationError("image has zero area");
    }
}

}  // namespace

GrayImage prepare_eval(const GrayImage& image, int target_size, const Stats& pixel_stats) {
    require_nonempty(image);
    return normalize(resize_bilinear(image, target_size, target_size), pixel_stats);
}

GrayImage prepare_with_draw(const GrayImage& image, const AugmentDraw& draw, int target_size,
                            const Stats& pixel_stats) {
    require_nonempty(image);
    GrayImage out = resize_bilinear(image, target_size, target_size);
    if (draw.flip) out = flip_horizontal(out);
    if (draw.intensity_scale != 1.0) out = scale_intensity(out, draw.intensity_scale);
    if (draw.quarter_turns % 4 != 0) out = rotate_quarter(out, draw.quarter_turns);
    return normalize(out, pixel_stats);
}

GrayImage prepare_train(const GrayImage& image, const AugmentPolicy& policy,
                        const Stats& pixel_stats, Rng& rng) {
    return prepare_with_draw(image, draw_augmentation(policy, rng), policy.target_size, pixel_stats);
}

}  // namespace rascore
