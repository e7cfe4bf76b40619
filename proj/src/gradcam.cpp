#include "rascore/gradcam.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace rascore {

std::vector<Heatmap> grad_cam(Model& model, const Tensor& batch, const CamTarget& target) {
    if (batch.ndim() != 4) throw ValidationError("grad_cam input must be a (N,1,H,W) batch");
    const int out_width = head_width(model.spec().head);
    if (target.klass) {
        if (model.spec().head != HeadKind::classification) {
            throw ValidationError("class target requires a classification head");
        }
        if (*target.klass < 0 || *target.klass >= out_width) {
            throw ValidationError("grad_cam class target outside [0," + std::to_string(out_width - 1) + "]");
        }
    } else if (model.spec().head != HeadKind::regression) {
        throw ValidationError("regression target requires a regression head");
    }

    const Tensor out = model.forward(batch, /*train=*/false);
    const Tensor& features = model.features();
    const int batch_size = batch.dim(0);
    const int channels = features.dim(1), fh = features.dim(2), fw = features.dim(3);
    const std::int64_t spatial = static_cast<std::int64_t>(fh) * fw;

    Tensor dout({batch_size, out_width});
    const int target_col = target.klass.value_or(0);
    for (int n = 0; n < batch_size; ++n) dout.at2(n, target_col) = 1.0;
    const Tensor dfeat = model.feature_grad(dout);

    const int input_size = batch.dim(2);
    std::vector<Heatmap> heatmaps;
    heatmaps.reserve(static_cast<std::size_t>(batch_size));
    for (int n = 0; n < batch_size; ++n) {
        GrayImage cam(fh, fw, 0.0);
        for (int c = 0; c < channels; ++c) {
            const double* grad =
                dfeat.data() + (static_cast<std::int64_t>(n) * channels + c) * spatial;
            double weight = 0.0;  // spatial average of the gradient
            for (std::int64_t i = 0; i < spatial; ++i) weight += grad[i];
            weight /= static_cast<double>(spatial);

            const double* act =
                features.data() + (static_cast<std::int64_t>(n) * channels + c) * spatial;
            for (std::int64_t i = 0; i < spatial; ++i) {
                cam.pixels[static_cast<std::size_t>(i)] += weight * act[i];
            }
        }
        for (double& v : cam.pixels) v = std::max(v, 0.0);  // rectification

        Heatmap heatmap;
        heatmap.source_height = fh;
        heatmap.source_width = fw;
        heatmap.values = resize_bilinear(cam, input_size, batch.dim(3));
        double max_v = 0.0;
        for (double v : heatmap.values.pixels) max_v = std::max(max_v, v);
        heatmap.raw_max = max_v;
        if (max_v > 0.0) {
            for (double& v : heatmap.values.pixels) v /= max_v;
        }
        heatmaps.push_back(std::move(heatmap));
    }
    return heatmaps;
}

Heatmap grad_cam_single(Model& model, const GrayImage& preprocessed, const CamTarget& target) {
    Tensor batch({1, 1, preprocessed.height, preprocessed.width});
    std::copy(preprocessed.pixels.begin(), preprocessed.pixels.end(), batch.data());
    return std::move(grad_cam(model, batch, target).front());
}

void render_overlay(const GrayImage& image, const Heatmap& heatmap, const std::string& out_path,
                    double alpha) {
    if (image.height != heatmap.values.height || image.width != heatmap.values.width) {
        throw ValidationError("overlay requires heatmap and image at the same resolution");
    }
    cv::Mat gray(image.height, image.width, CV_8U);
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            gray.at<uchar>(r, c) =
                static_cast<uchar>(std::lround(std::clamp(image.at(r, c), 0.0, 1.0) * 255.0));
        }
    }
    cv::Mat heat8(image.height, image.width, CV_8U);
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            heat8.at<uchar>(r, c) = static_cast<uchar>(
                std::lround(std::clamp(heatmap.values.at(r, c), 0.0, 1.0) * 255.0));
        }
    }
    cv::Mat colored;
    cv::applyColorMap(heat8, colored, cv::COLORMAP_JET);

    cv::Mat gray_bgr;
    cv::cvtColor(gray, gray_bgr, cv::COLOR_GRAY2BGR);
    cv::Mat blended(image.height, image.width, CV_8UC3);
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            const double a = alpha * std::clamp(heatmap.values.at(r, c), 0.0, 1.0);
            const cv::Vec3b g = gray_bgr.at<cv::Vec3b>(r, c);
            const cv::Vec3b h = colored.at<cv::Vec3b>(r, c);
            cv::Vec3b& out = blended.at<cv::Vec3b>(r, c);
            for (int ch = 0; ch < 3; ++ch) {
                out[ch] = static_cast<uchar>(std::lround((1.0 - a) * g[ch] + a * h[ch]));
            }
        }
    }
    if (!cv::imwrite(out_path, blended)) throw IoError("cannot write overlay: " + out_path);
}

}  // namespace rascore
