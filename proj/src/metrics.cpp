#include "rascore/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace rascore {

namespace {

void require_aligned(std::size_t a, std::size_t b) {
    if (a == 0 || a != b) {
        throw ValidationError("metric inputs must be non-empty and of equal length");
    }
}

double mean_of(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

}  // namespace

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    require_aligned(x.size(), y.size());
    if (x.size() < 2) throw ValidationError("PCC requires at least two samples");
    const double mx = mean_of(x), my = mean_of(y);
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if (vx == 0.0 || vy == 0.0) {
        throw ValidationError("PCC undefined: a series has zero variance");
    }
    const double denom = static_cast<double>(x.size() - 1);
    return (cov / denom) / (std::sqrt(vx / denom) * std::sqrt(vy / denom));
}

MetricsReport regression_metrics(const std::vector<double>& predicted,
                                 const std::vector<double>& truth) {
    require_aligned(predicted.size(), truth.size());
    MetricsReport report;
    report.n = predicted.size();
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double err = predicted[i] - truth[i];
        abs_sum += std::abs(err);
        sq_sum += err * err;
    }
    report.mae = abs_sum / static_cast<double>(predicted.size());
    report.rmse = std::sqrt(sq_sum / static_cast<double>(predicted.size()));
    try {
        report.pcc = pearson_correlation(predicted, truth);
    } catch (const ValidationError&) {
        report.pcc.reset();  // undefined; MAE/RMSE still reported
    }
    return report;
}

MetricsReport classification_metrics(const std::vector<int>& predicted_classes,
                                     const std::vector<int>& true_classes) {
    require_aligned(predicted_classes.size(), true_classes.size());
    for (std::size_t i = 0; i < predicted_classes.size(); ++i) {
        if (predicted_classes[i] < 0 || predicted_classes[i] >= kSeverityClassCount ||
            true_classes[i] < 0 || true_classes[i] >= kSeverityClassCount) {
            throw ValidationError("class index outside [0,9] at row " + std::to_string(i));
        }
    }

    std::array<std::array<std::size_t, kSeverityClassCount>, kSeverityClassCount> confusion{};
    for (std::size_t i = 0; i < predicted_classes.size(); ++i) {
        confusion[static_cast<std::size_t>(true_classes[i])]
                 [static_cast<std::size_t>(predicted_classes[i])] += 1;
    }

    std::size_t correct = 0;
    double recall_sum = 0.0;
    int represented = 0;
    for (int k = 0; k < kSeverityClassCount; ++k) {
        std::size_t row_total = 0;
        for (int j = 0; j < kSeverityClassCount; ++j) row_total += confusion[k][j];
        correct += confusion[k][k];
        if (row_total > 0) {
            recall_sum += static_cast<double>(confusion[k][k]) / static_cast<double>(row_total);
            ++represented;
        }
    }

    std::vector<double> pred_d(predicted_classes.begin(), predicted_classes.end());
    std::vector<double> true_d(true_classes.begin(), true_classes.end());
    MetricsReport report = regression_metrics(pred_d, true_d);
    report.accuracy = static_cast<double>(correct) / static_cast<double>(predicted_classes.size());
    report.balanced_accuracy = recall_sum / static_cast<double>(represented);
    report.confusion = confusion;
    return report;
}

std::vector<int> regression_to_classification(const std::vector<double>& predicted_scores,
                                              const SeverityBinning& binning) {
    std::vector<int> classes;
    classes.reserve(predicted_scores.size());
    for (double score : predicted_scores) {
        classes.push_back(binning.score_to_class(std::clamp(score, 0.0, kMaxTotalScore)));
    }
    return classes;
}

CamCaseSelection select_cam_cases(const std::vector<std::string>& ids,
                                  const std::vector<double>& predicted,
                                  const std::vector<double>& truth) {
    require_aligned(predicted.size(), truth.size());
    if (ids.size() != predicted.size()) {
        throw ValidationError("case ids must align with predictions");
    }
    CamCaseSelection selection;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double err = predicted[i] - truth[i];
        if (truth[i] > kCamSevereThreshold && std::abs(err) < kCamGoodErrorBound) {
            selection.true_positive.push_back(ids[i]);
        } else if (truth[i] < kCamHealthyThreshold && std::abs(err) < kCamGoodErrorBound) {
            selection.true_negative.push_back(ids[i]);
        } else if (err > kCamBadErrorBound) {
            selection.false_positive.push_back(ids[i]);  // over-scored
        } else if (err < -kCamBadErrorBound) {
            selection.false_negative.push_back(ids[i]);  // under-scored
        }
    }
    return selection;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    if (pcc) {
        j["pcc"] = *pcc;
    } else {
        j["pcc"] = nullptr;
    }
    j["mae"] = mae;
    j["rmse"] = rmse;
    if (accuracy) j["accuracy"] = *accuracy;
    if (balanced_accuracy) j["balanced_accuracy"] = *balanced_accuracy;
    if (confusion) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : *confusion) {
            rows.push_back(std::vector<std::size_t>(row.begin(), row.end()));
        }
        j["confusion"] = rows;
    }
    return j.dump(2);
}

}  // namespace rascore
