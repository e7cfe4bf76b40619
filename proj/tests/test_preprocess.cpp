#include <doctest.h>

#include <algorithm>
#include <random>

#include "rascore/preprocess.hpp"

using namespace rascore;

namespace {

GrayImage random_image(int h, int w, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    GrayImage image(h, w);
    for (double& v : image.pixels) v = dist(rng);
    return image;
}

std::vector<double> sorted_pixels(const GrayImage& image) {
    std::vector<double> v = image.pixels;
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("prepare_eval resizes to the square target and z-scores pixels") {
    const GrayImage input = random_image(512, 768, 1);
    const Stats stats{0.5, 0.25};
    const GrayImage out = prepare_eval(input, 1024, stats);
    CHECK(out.height == 1024);
    CHECK(out.width == 1024);

    // A constant image equal to the mean normalizes to all zeros.
    const GrayImage constant(40, 56, 0.5);
    const GrayImage zeros = prepare_eval(constant, 64, stats);
    for (double v : zeros.pixels) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    // Identity normalization leaves an already-sized image unchanged.
    const GrayImage sized = random_image(64, 64, 2);
    const GrayImage same = prepare_eval(sized, 64, Stats{0.0, 1.0});
    CHECK(same.pixels == sized.pixels);
}

TEST_CASE("prepare_eval is pure and rejects empty images") {
    const GrayImage input = random_image(50, 70, 3);
    const Stats stats{0.4, 0.2};
    const GrayImage a = prepare_eval(input, 64, stats);
    const GrayImage b = prepare_eval(input, 64, stats);
    CHECK(a.pixels == b.pixels);
    CHECK_THROWS_AS(prepare_eval(GrayImage{}, 64, stats), ValidationError);
}

TEST_CASE("quarter turns and flips are exact pixel permutations") {
    for (unsigned seed = 0; seed < 100; ++seed) {
        const GrayImage image = random_image(32, 32, 100 + seed);
        const auto reference = sorted_pixels(image);
        for (int k = 1; k < 4; ++k) {
            CHECK(sorted_pixels(rotate_quarter(image, k)) == reference);
        }
        CHECK(sorted_pixels(flip_horizontal(image)) == reference);
    }
}

TEST_CASE("rotation involutions and inverses") {
    const GrayImage image = random_image(24, 24, 5);
    CHECK(rotate_quarter(rotate_quarter(image, 2), 2).pixels == image.pixels);
    CHECK(rotate_quarter(rotate_quarter(image, 1), 3).pixels == image.pixels);
    CHECK(flip_horizontal(flip_horizontal(image)).pixels == image.pixels);
    CHECK(rotate_quarter(image, 0).pixels == image.pixels);
}

TEST_CASE("forced identity draw reproduces prepare_eval bit-exactly") {
    const GrayImage image = random_image(48, 80, 6);
    const Stats stats{0.45, 0.31};
    const AugmentDraw identity{false, 1.0, 0};
    const GrayImage via_draw = prepare_with_draw(image, identity, 64, stats);
    const GrayImage via_eval = prepare_eval(image, 64, stats);
    CHECK(via_draw.pixels == via_eval.pixels);
}

TEST_CASE("intensity scaling is linear below the clamp and clamps above") {
    GrayImage image(4, 4, 0.0);
    for (std::size_t i = 0; i < image.size(); ++i) {
        image.pixels[i] = 0.05 * static_cast<double>(i);  // up to 0.75
    }
    const GrayImage scaled = scale_intensity(image, 1.1);
    for (std::size_t i = 0; i < image.size(); ++i) {
        CHECK(scaled.pixels[i] == doctest::Approx(1.1 * image.pixels[i]).epsilon(1e-12));
    }
    GrayImage bright(2, 2, 0.95);
    const GrayImage clamped = scale_intensity(bright, 1.1);
    for (double v : clamped.pixels) CHECK(v == 1.0);
}

TEST_CASE("augmentation draws respect the policy and are rng-deterministic") {
    AugmentPolicy policy;
    policy.target_size = 64;
    Rng rng_a = derived_rng(9, 1);
    Rng rng_b = derived_rng(9, 1);
    for (int i = 0; i < 200; ++i) {
        const AugmentDraw a = draw_augmentation(policy, rng_a);
        const AugmentDraw b = draw_augmentation(policy, rng_b);
        CHECK(a.flip == b.flip);
        CHECK(a.intensity_scale == b.intensity_scale);
        CHECK(a.quarter_turns == b.quarter_turns);
        CHECK(a.intensity_scale >= 0.9);
        CHECK(a.intensity_scale <= 1.1);
        CHECK(a.quarter_turns >= 0);
        CHECK(a.quarter_turns <= 3);
    }

    const GrayImage image = random_image(70, 50, 10);
    Rng rng_c = derived_rng(9, 1);
    Rng rng_d = derived_rng(9, 1);
    const GrayImage out_a = prepare_train(image, policy, Stats{0.5, 0.2}, rng_c);
    const GrayImage out_b = prepare_train(image, policy, Stats{0.5, 0.2}, rng_d);
    CHECK(out_a.pixels == out_b.pixels);
    CHECK(out_a.height == 64);
}

TEST_CASE("policy validation") {
    AugmentPolicy bad;
    bad.intensity_low = 1.2;
    bad.intensity_high = 0.9;
    CHECK_THROWS_AS(validate_policy(bad), ConfigError);
    AugmentPolicy bad_flip;
    bad_flip.horizontal_flip_prob = 1.5;
    CHECK_THROWS_AS(validate_policy(bad_flip), ConfigError);
}

TEST_CASE("pixel statistics come from resized training images") {
    // Two constant train images: values 0.2 and 0.6 -> mean 0.4, sd 0.2.
    const std::vector<GrayImage> train{GrayImage(10, 12, 0.2), GrayImage(30, 8, 0.6)};
    const Stats stats = compute_pixel_stats(train, 16);
    CHECK(stats.mean == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(stats.sd == doctest::Approx(0.2).epsilon(1e-9));
    CHECK_THROWS_AS(compute_pixel_stats({GrayImage(4, 4, 0.3)}, 16), ValidationError);  // zero var
    CHECK_THROWS_AS(compute_pixel_stats({}, 16), ValidationError);
}

TEST_CASE("bilinear resize basics") {
    const GrayImage constant(13, 7, 0.37);
    const GrayImage up = resize_bilinear(constant, 64, 64);
    for (double v : up.pixels) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));

    // Downscale of a linear ramp stays within the input range and monotone.
    GrayImage ramp(32, 32, 0.0);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) ramp.at(r, c) = c / 31.0;
    }
    const GrayImage down = resize_bilinear(ramp, 8, 8);
    for (int r = 0; r < 8; ++r) {
        for (int c = 1; c < 8; ++c) CHECK(down.at(r, c) >= down.at(r, c - 1));
    }
}
