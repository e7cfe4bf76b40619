#include "rascore/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>

namespace rascore {

GrayImage load_gray_image(const std::string& path) {
    cv::Mat raw = cv::imread(path, cv::IMREAD_UNCHANGED | cv::IMREAD_ANYDEPTH);
    if (raw.empty()) throw IoError("cannot decode image: " + path);
    if (raw.channels() != 1) {
        cv::Mat gray;
        // Color inputs occasionally appear (e.g. RGB-saved scans); average the
        // channels down to one.
        raw.convertTo(gray, CV_64F);
        std::vector<cv::Mat> channels;
        cv::split(gray, channels);
        cv::Mat acc = channels[0];
        for (std::size_t i = 1; i < channels.size(); ++i) acc += channels[i];
        raw = acc / static_cast<double>(channels.size());
    }

    double scale = 1.0;
    switch (raw.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        case CV_64F: scale = 1.0 / 255.0; break;  // averaged 8-bit channels
        default: throw IoError("unsupported image depth in " + path);
    }

    cv::Mat m;
    raw.convertTo(m, CV_64F, scale);
    GrayImage image(m.rows, m.cols);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.ptr<double>(r);
        for (int c = 0; c < m.cols; ++c) image.at(r, c) = row[c];
    }
    return image;
}

void save_gray_png(const GrayImage& image, const std::string& path) {
    if (image.empty()) throw ValidationError("cannot save an empty image");
    cv::Mat m(image.height, image.width, CV_8U);
    for (int r = 0; r < image.height; ++r) {
        uchar* row = m.ptr<uchar>(r);
        for (int c = 0; c < image.width; ++c) {
            const double v = std::clamp(image.at(r, c), 0.0, 1.0);
            row[c] = static_cast<uchar>(std::lround(v * 255.0));
        }
    }
    if (!cv::imwrite(path, m)) throw IoError("cannot write image: " + path);
}

GrayImage resize_bilinear(const GrayImage& image, int out_height, int out_width) {
    if (image.empty() || image.height <= 0 || image.width <= 0) {
        throw ValidationError("cannot resize an empty image");
    }
    if (out_height <= 0 || out_width <= 0) throw ValidationError("resize target must be positive");
    if (out_height == image.height && out_width == image.width) return image;

    GrayImage out(out_height, out_width);
    const double sy = static_cast<double>(image.height) / out_height;
    const double sx = static_cast<double>(image.width) / out_width;
    for (int r = 0; r < out_height; ++r) {
        const double fy = (r + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const double wy = fy - y0;
        int y1 = y0 + 1;
        y0 = std::clamp(y0, 0, image.height - 1);
        y1 = std::clamp(y1, 0, image.height - 1);
        for (int c = 0; c < out_width; ++c) {
            const double fx = (c + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const double wx = fx - x0;
            int x1 = x0 + 1;
            x0 = std::clamp(x0, 0, image.width - 1);
            x1 = std::clamp(x1, 0, image.width - 1);
            const double top = image.at(y0, x0) * (1.0 - wx) + image.at(y0, x1) * wx;
            const double bottom = image.at(y1, x0) * (1.0 - wx) + image.at(y1, x1) * wx;
            out.at(r, c) = top * (1.0 - wy) + bottom * wy;
        }
    }
    return out;
}

}  // namespace rascore
