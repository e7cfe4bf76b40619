#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <opencv2/imgcodecs.hpp>

#include "rascore/gradcam.hpp"

using namespace rascore;
namespace fs = std::filesystem;

namespace {

Tensor random_batch(int n, int side, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor x({n, 1, side, side});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = dist(rng);
    return x;
}

GrayImage random_image(int side, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    GrayImage image(side, side);
    for (double& v : image.pixels) v = dist(rng);
    return image;
}

std::string temp_file(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST_CASE("heatmaps are non-negative and per-image normalized to max 1") {
    for (BackboneKind kind :
         {BackboneKind::resnet34, BackboneKind::resnet50, BackboneKind::mobilenetv2}) {
        Model model({kind, HeadKind::regression, FreezeScheme::none, true}, 17);
        const auto heatmaps = grad_cam(model, random_batch(2, 64, 17), CamTarget::regression_output());
        REQUIRE(heatmaps.size() == 2);
        for (const Heatmap& h : heatmaps) {
            double max_v = 0.0;
            for (double v : h.values.pixels) {
                CHECK(v >= 0.0);
                max_v = std::max(max_v, v);
            }
            if (h.raw_max > 0.0) CHECK(max_v == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("pre-upsampling size equals the backbone's final feature-map size") {
    for (BackboneKind kind :
         {BackboneKind::resnet34, BackboneKind::resnet50, BackboneKind::mobilenetv2}) {
        Model model({kind, HeadKind::regression, FreezeScheme::none, true}, 18);
        const auto heatmaps = grad_cam(model, random_batch(1, 64, 18), CamTarget::regression_output());
        // total stride 32
        CHECK(heatmaps[0].source_height == 2);
        CHECK(heatmaps[0].source_width == 2);
        CHECK(heatmaps[0].values.height == 64);  // rendered at input resolution
        CHECK(model.features().dim(2) == 2);
    }
}

TEST_CASE("a zero-weight head yields an all-zero heatmap, normalization skipped") {
    Model model({BackboneKind::resnet34, HeadKind::regression, FreezeScheme::none, true}, 19);
    model.head().weight().value.fill(0.0);
    model.head().bias().value.fill(0.0);
    const auto heatmaps = grad_cam(model, random_batch(1, 64, 19), CamTarget::regression_output());
    CHECK(heatmaps[0].raw_max == 0.0);
    for (double v : heatmaps[0].values.pixels) CHECK(v == 0.0);
}

TEST_CASE("heatmaps are invariant to constant shifts of the output") {
    Model model({BackboneKind::resnet50, HeadKind::regression, FreezeScheme::none, true}, 20);
    const Tensor batch = random_batch(1, 64, 20);
    const auto base = grad_cam(model, batch, CamTarget::regression_output());
    model.head().bias().value[0] += 123.456;  // shifts the output, not the gradients
    const auto shifted = grad_cam(model, batch, CamTarget::regression_output());
    CHECK(base[0].values.pixels == shifted[0].values.pixels);
    CHECK(base[0].raw_max == shifted[0].raw_max);
}

TEST_CASE("scaling the head scales raw values but not the normalized heatmap") {
    Model model({BackboneKind::mobilenetv2, HeadKind::regression, FreezeScheme::none, true}, 21);
    const Tensor batch = random_batch(1, 64, 21);
    const auto base = grad_cam(model, batch, CamTarget::regression_output());
    for (std::int64_t i = 0; i < model.head().weight().value.size(); ++i) {
        model.head().weight().value[i] *= 3.0;
    }
    const auto scaled = grad_cam(model, batch, CamTarget::regression_output());
    CHECK(scaled[0].raw_max == doctest::Approx(3.0 * base[0].raw_max).epsilon(1e-9));
    for (std::size_t i = 0; i < base[0].values.pixels.size(); ++i) {
        CHECK(scaled[0].values.pixels[i] ==
              doctest::Approx(base[0].values.pixels[i]).epsilon(1e-9));
    }
}

TEST_CASE("duplicate images in a batch get identical heatmaps") {
    Model model({BackboneKind::resnet34, HeadKind::classification, FreezeScheme::none, true}, 22);
    const Tensor one = random_batch(1, 64, 22);
    Tensor two({2, 1, 64, 64});
    for (std::int64_t i = 0; i < one.size(); ++i) {
        two[i] = one[i];
        two[one.size() + i] = one[i];
    }
    const auto heatmaps = grad_cam(model, two, CamTarget::class_logit(3));
    CHECK(heatmaps[0].values.pixels == heatmaps[1].values.pixels);
}

TEST_CASE("target validation") {
    Model cls({BackboneKind::resnet34, HeadKind::classification, FreezeScheme::none, true}, 23);
    CHECK_THROWS_AS(grad_cam(cls, random_batch(1, 64, 23), CamTarget::class_logit(10)),
                    ValidationError);
    CHECK_THROWS_AS(grad_cam(cls, random_batch(1, 64, 23), CamTarget::regression_output()),
                    ValidationError);
    Model reg({BackboneKind::resnet34, HeadKind::regression, FreezeScheme::none, true}, 23);
    CHECK_THROWS_AS(grad_cam(reg, random_batch(1, 64, 23), CamTarget::class_logit(0)),
                    ValidationError);
}

TEST_CASE("overlay with a zero heatmap reproduces the radiograph exactly") {
    GrayImage image(32, 32, 0.0);
    for (std::size_t i = 0; i < image.size(); ++i) {
        image.pixels[i] = static_cast<double>(i % 256) / 255.0;
    }
    Heatmap zero;
    zero.values = GrayImage(32, 32, 0.0);
    const std::string overlay_path = temp_file("rascore_overlay_zero.png");
    render_overlay(image, zero, overlay_path, 0.5);
    const GrayImage decoded = load_gray_image(overlay_path);
    REQUIRE(decoded.size() == image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        // 8-bit quantization of the base image is the only difference.
        CHECK(decoded.pixels[i] ==
              doctest::Approx(std::round(image.pixels[i] * 255.0) / 255.0).epsilon(1e-9));
    }
    std::remove(overlay_path.c_str());
}

TEST_CASE("overlay rendering is deterministic and localizes a hot spot") {
    const GrayImage image(64, 64, 0.25);
    Heatmap hot;
    hot.values = GrayImage(64, 64, 0.0);
    hot.values.at(10, 12) = 1.0;
    hot.raw_max = 1.0;

    const std::string path_a = temp_file("rascore_overlay_a.png");
    const std::string path_b = temp_file("rascore_overlay_b.png");
    render_overlay(image, hot, path_a, 0.5);
    render_overlay(image, hot, path_b, 0.5);
    CHECK(file_bytes(path_a) == file_bytes(path_b));

    // Only the hot pixel differs from the plain radiograph rendering.
    Heatmap zero;
    zero.values = GrayImage(64, 64, 0.0);
    const std::string path_plain = temp_file("rascore_overlay_plain.png");
    render_overlay(image, zero, path_plain, 0.5);
    cv::Mat a = cv::imread(path_a);
    cv::Mat plain = cv::imread(path_plain);
    int differing = 0;
    for (int r = 0; r < a.rows; ++r) {
        for (int c = 0; c < a.cols; ++c) {
            if (a.at<cv::Vec3b>(r, c) != plain.at<cv::Vec3b>(r, c)) ++differing;
        }
    }
    CHECK(differing == 1);

    std::remove(path_a.c_str());
    std::remove(path_b.c_str());
    std::remove(path_plain.c_str());

    CHECK_THROWS_AS(render_overlay(GrayImage(16, 16, 0.0), hot, temp_file("x.png"), 0.5),
                    ValidationError);
}

TEST_CASE("bilinear upsampling of a single hot feature cell stays in its quadrant") {
    GrayImage source(2, 2, 0.0);
    source.at(0, 0) = 1.0;
    const GrayImage up = resize_bilinear(source, 64, 64);
    double max_v = 0.0;
    for (double v : up.pixels) max_v = std::max(max_v, v);
    for (int r = 0; r < 64; ++r) {
        for (int c = 0; c < 64; ++c) {
            if (up.at(r, c) == max_v) {
                CHECK(r < 32);
                CHECK(c < 32);
            }
        }
    }
}
