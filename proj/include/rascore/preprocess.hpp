#pragma once

#include "rascore/common.hpp"
#include "rascore/image.hpp"
#include "rascore/model.hpp"

namespace rascore {

/// Training-time augmentation recipe: resize, optional horizontal flip,
/// uniform intensity scale, one exact quarter-turn rotation, then z-score
/// normalization with the training-set pixel statistics.
struct AugmentPolicy {
    double horizontal_flip_prob = 0.5;
    double intensity_low = 0.9;
    double intensity_high = 1.1;
    int target_size = 1024;
};

void validate_policy(const AugmentPolicy& policy);

/// One concrete draw from the policy; exposed so tests can force a draw.
struct AugmentDraw {
    bool flip = false;
    double intensity_scale = 1.0;
    int quarter_turns = 0;  // multiples of 90 degrees, counter-clockwise
};

AugmentDraw draw_augmentation(const AugmentPolicy& policy, Rng& rng);

/// Exact pixel permutations (no interpolation).
GrayImage flip_horizontal(const GrayImage& image);
GrayImage rotate_quarter(const GrayImage& image, int quarter_turns);

/// Multiplies intensities by `scale`, clamping to the representable [0,1].
GrayImage scale_intensity(const GrayImage& image, double scale);

/// Mean/SD over all training-split pixels of resized (un-augmented) images.
Stats compute_pixel_stats(const std::vector<GrayImage>& train_images, int target_size);

/// Resize + normalize, the deterministic evaluation path.
GrayImage prepare_eval(const GrayImage& image, int target_size, const Stats& pixel_stats);

/// Resize, apply a forced augmentation draw, normalize.
GrayImage prepare_with_draw(const GrayImage& image, const AugmentDraw& draw, int target_size,
                            const Stats& pixel_stats);

/// Resize + random augmentation + normalize; deterministic given `rng` state.
GrayImage prepare_train(const GrayImage& image, const AugmentPolicy& policy,
                        const Stats& pixel_stats, Rng& rng);

}  // namespace rascore
