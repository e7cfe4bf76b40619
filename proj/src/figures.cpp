#include "rascore/figures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace rascore {

namespace {

constexpr int kCanvas = 720;
constexpr int kMargin = 70;

cv::Point plot_point(double x, double y, double lo, double hi) {
    const double span = hi - lo;
    const int px = kMargin + static_cast<int>(std::lround((x - lo) / span * (kCanvas - 2 * kMargin)));
    const int py =
        kCanvas - kMargin - static_cast<int>(std::lround((y - lo) / span * (kCanvas - 2 * kMargin)));
    return {px, py};
}

std::string format_number(double v) {
    std::ostringstream s;
    if (std::abs(v - std::lround(v)) < 1e-9) {
        s << static_cast<long long>(std::llround(v));
    } else {
        s.precision(1);
        s << std::fixed << v;
    }
    return s.str();
}

}  // namespace

void render_scatter_figure(const std::vector<double>& predicted, const std::vector<double>& truth,
                           const std::string& out_path) {
    if (predicted.empty() || predicted.size() != truth.size()) {
        throw ValidationError("scatter figure needs aligned non-empty predictions and truth");
    }
    double lo = 0.0, hi = kMaxTotalScore;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        lo = std::min({lo, predicted[i], truth[i]});
        hi = std::max({hi, predicted[i], truth[i]});
    }

    cv::Mat canvas(kCanvas, kCanvas, CV_8UC3, cv::Scalar(255, 255, 255));
    const cv::Scalar axis_color(60, 60, 60);
    cv::rectangle(canvas, plot_point(lo, hi, lo, hi), plot_point(hi, lo, lo, hi), axis_color, 1);
    cv::line(canvas, plot_point(lo, lo, lo, hi), plot_point(hi, hi, lo, hi), cv::Scalar(160, 160, 160),
             1);

    for (int tick = 0; tick <= 280; tick += 40) {
        if (tick < lo || tick > hi) continue;
        const cv::Point px = plot_point(tick, lo, lo, hi);
        cv::line(canvas, px, {px.x, px.y + 5}, axis_color, 1);
        cv::putText(canvas, format_number(tick), {px.x - 12, px.y + 22}, cv::FONT_HERSHEY_SIMPLEX,
                    0.4, axis_color, 1, cv::LINE_AA);
        const cv::Point py = plot_point(lo, tick, lo, hi);
        cv::line(canvas, py, {py.x - 5, py.y}, axis_color, 1);
        cv::putText(canvas, format_number(tick), {py.x - 45, py.y + 4}, cv::FONT_HERSHEY_SIMPLEX,
                    0.4, axis_color, 1, cv::LINE_AA);
    }
    cv::putText(canvas, "true score", {kCanvas / 2 - 40, kCanvas - 20}, cv::FONT_HERSHEY_SIMPLEX,
                0.5, axis_color, 1, cv::LINE_AA);
    cv::putText(canvas, "predicted", {10, 30}, cv::FONT_HERSHEY_SIMPLEX, 0.5, axis_color, 1,
                cv::LINE_AA);

    for (std::size_t i = 0; i < predicted.size(); ++i) {
        cv::circle(canvas, plot_point(truth[i], predicted[i], lo, hi), 2, cv::Scalar(180, 120, 40),
                   -1, cv::LINE_AA);
    }

    // Decile mean and SD of predictions, binned by true score.
    std::vector<std::size_t> index(truth.size());
    std::iota(index.begin(), index.end(), 0);
    std::sort(index.begin(), index.end(),
              [&truth](std::size_t a, std::size_t b) { return truth[a] < truth[b]; });
    const std::size_t n = index.size();
    for (int d = 0; d < 10; ++d) {
        const std::size_t begin = n * static_cast<std::size_t>(d) / 10;
        const std::size_t end = n * static_cast<std::size_t>(d + 1) / 10;
        if (end <= begin) continue;
        double mean_t = 0.0, mean_p = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            mean_t += truth[index[i]];
            mean_p += predicted[index[i]];
        }
        const double count = static_cast<double>(end - begin);
        mean_t /= count;
        mean_p /= count;
        double var_p = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double dp = predicted[index[i]] - mean_p;
            var_p += dp * dp;
        }
        const double sd_p = std::sqrt(var_p / count);
        const cv::Scalar decile_color(40, 40, 200);
        cv::line(canvas, plot_point(mean_t, mean_p - sd_p, lo, hi),
                 plot_point(mean_t, mean_p + sd_p, lo, hi), decile_color, 1, cv::LINE_AA);
        cv::circle(canvas, plot_point(mean_t, mean_p, lo, hi), 4, decile_color, -1, cv::LINE_AA);
    }

    if (!cv::imwrite(out_path, canvas)) throw IoError("cannot write figure: " + out_path);
}

void render_confusion_figure(
    const std::array<std::array<std::size_t, kSeverityClassCount>, kSeverityClassCount>& confusion,
    const SeverityBinning& binning, const std::string& out_path) {
    constexpr int kCell = 64;
    constexpr int kLabel = 96;
    const int size = kLabel + kCell * kSeverityClassCount + 20;
    cv::Mat canvas(size, size, CV_8UC3, cv::Scalar(255, 255, 255));

    std::array<std::size_t, kSeverityClassCount> row_totals{};
    for (int r = 0; r < kSeverityClassCount; ++r) {
        row_totals[static_cast<std::size_t>(r)] =
            std::accumulate(confusion[static_cast<std::size_t>(r)].begin(),
                            confusion[static_cast<std::size_t>(r)].end(), std::size_t{0});
    }

    for (int r = 0; r < kSeverityClassCount; ++r) {
        for (int c = 0; c < kSeverityClassCount; ++c) {
            const std::size_t count = confusion[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            const double prop =
                row_totals[static_cast<std::size_t>(r)] > 0
                    ? static_cast<double>(count) / static_cast<double>(row_totals[static_cast<std::size_t>(r)])
                    : 0.0;
            const int x = kLabel + c * kCell, y = kLabel + r * kCell;
            const int shade = 255 - static_cast<int>(std::lround(prop * 180.0));
            cv::rectangle(canvas, {x, y}, {x + kCell, y + kCell}, cv::Scalar(shade, shade, 255), -1);
            cv::rectangle(canvas, {x, y}, {x + kCell, y + kCell}, cv::Scalar(120, 120, 120), 1);
            if (count > 0) {
                cv::putText(canvas, std::to_string(count), {x + 6, y + 26}, cv::FONT_HERSHEY_SIMPLEX,
                            0.45, cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
                std::ostringstream pct;
                pct.precision(0);
                pct << std::fixed << prop * 100.0 << "%";
                cv::putText(canvas, pct.str(), {x + 6, y + 50}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                            cv::Scalar(90, 90, 90), 1, cv::LINE_AA);
            }
        }
    }

    const auto& edges = binning.edges();
    for (int k = 0; k < kSeverityClassCount; ++k) {
        std::ostringstream label;
        label << format_number(edges[static_cast<std::size_t>(k)]) << "-"
              << format_number(edges[static_cast<std::size_t>(k) + 1]);
        cv::putText(canvas, label.str(), {kLabel + k * kCell + 4, kLabel - 8},
                    cv::FONT_HERSHEY_SIMPLEX, 0.35, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
        cv::putText(canvas, label.str(), {6, kLabel + k * kCell + kCell / 2 + 4},
                    cv::FONT_HERSHEY_SIMPLEX, 0.35, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
    }
    cv::putText(canvas, "predicted", {kLabel + 4 * kCell, 28}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
    cv::putText(canvas, "true", {6, 28}, cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(60, 60, 60), 1,
                cv::LINE_AA);

    if (!cv::imwrite(out_path, canvas)) throw IoError("cannot write figure: " + out_path);
}

}  // namespace rascore
