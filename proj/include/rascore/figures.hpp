#pragma once

#include <string>
#include <vector>

#include "rascore/binning.hpp"
#include "rascore/metrics.hpp"

namespace rascore {

/// Predicted-vs-true scatter with the identity line and per-decile mean and
/// SD markers, written as PNG.
void render_scatter_figure(const std::vector<double>& predicted, const std::vector<double>& truth,
                           const std::string& out_path);

/// 10x10 confusion matrix rendered as a shaded grid with counts and
/// row proportions, labeled with the severity bin ranges.
void render_confusion_figure(
    const std::array<std::array<std::size_t, kSeverityClassCount>, kSeverityClassCount>& confusion,
    const SeverityBinning& binning, const std::string& out_path);

}  // namespace rascore
