#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rascore/binning.hpp"
#include "rascore/common.hpp"
#include "rascore/svdh.hpp"

namespace rascore {

/// Metrics of one evaluation run. PCC is absent when either series has zero
/// variance; accuracy / balanced accuracy / confusion only apply to
/// classification runs.
struct MetricsReport {
    std::optional<double> pcc;
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
    std::optional<double> accuracy;
    std::optional<double> balanced_accuracy;
    std::optional<std::array<std::array<std::size_t, kSeverityClassCount>, kSeverityClassCount>>
        confusion;

    std::string to_json() const;
};

/// Pearson's correlation coefficient with sample (n-1) normalization in both
/// covariance and variances. Throws ValidationError when a series has zero
/// variance.
double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

/// PCC (when defined), MAE and RMSE between predictions and ground truth.
MetricsReport regression_metrics(const std::vector<double>& predicted,
                                 const std::vector<double>& truth);

/// Accuracy, balanced accuracy, confusion matrix, plus PCC/MAE/RMSE on the
/// class indices treated as integers. Classes absent from the truth are
/// excluded from the balanced-accuracy mean.
MetricsReport classification_metrics(const std::vector<int>& predicted_classes,
                                     const std::vector<int>& true_classes);

/// Clamp scores into [0,280] and bin them.
std::vector<int> regression_to_classification(const std::vector<double>& predicted_scores,
                                              const SeverityBinning& binning);

/// Exemplars for Grad-CAM review. TP: severe truth (> 200) predicted within
/// 10; TN: healthy truth (< 5) predicted within 10; FP: over-scored by more
/// than 50; FN: under-scored by more than 50.
struct CamCaseSelection {
    std::vector<std::string> true_positive;
    std::vector<std::string> true_negative;
    std::vector<std::string> false_positive;
    std::vector<std::string> false_negative;
};

inline constexpr double kCamHealthyThreshold = 5.0;
inline constexpr double kCamSevereThreshold = 200.0;
inline constexpr double kCamGoodErrorBound = 10.0;
inline constexpr double kCamBadErrorBound = 50.0;

CamCaseSelection select_cam_cases(const std::vector<std::string>& ids,
                                  const std::vector<double>& predicted,
                                  const std::vector<double>& truth);

}  // namespace rascore
