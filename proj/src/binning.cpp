#include "rascore/binning.hpp"

#include <cmath>
#include <sstream>

namespace rascore {

SeverityBinning SeverityBinning::from_edges(const std::vector<double>& edges) {
    if (edges.size() != kSeverityClassCount + 1) {
        std::ostringstream msg;
        msg << "severity binning needs 11 edges, got " << edges.size();
        throw ValidationError(msg.str());
    }
    if (edges.front() != 0.0 || edges.back() != 280.0) {
        throw ValidationError("severity binning must span [0,280]");
    }
    for (int k = 0; k < kSeverityClassCount; ++k) {
        if (!(edges[k] < edges[k + 1])) {
            throw ValidationError("severity bin edges must be strictly increasing");
        }
    }
    for (int k = 1; k < kSeverityClassCount; ++k) {
        const double prev_width = edges[k] - edges[k - 1];
        const double width = edges[k + 1] - edges[k];
        if (width < prev_width) {
            std::ostringstream msg;
            msg << "severity bin widths must be non-decreasing; bin " << k << " is narrower than bin "
                << k - 1;
            throw ValidationError(msg.str());
        }
    }
    SeverityBinning binning;
    for (int k = 0; k <= kSeverityClassCount; ++k) binning.edges_[k] = edges[k];
    return binning;
}

SeverityBinning SeverityBinning::default_binning() {
    return from_edges({0, 5, 10, 15, 20, 30, 45, 70, 110, 180, 280});
}

int SeverityBinning::score_to_class(double total) const {
    if (!std::isfinite(total) || total < edges_.front() || total > edges_.back()) {
        std::ostringstream msg;
        msg << "score " << total << " is outside [0,280]";
        throw ValidationError(msg.str());
    }
    for (int k = 0; k < kSeverityClassCount; ++k) {
        if (total < edges_[k + 1]) return k;
    }
    return kSeverityClassCount - 1;  // total == 280, last bin is closed
}

double SeverityBinning::midpoint(int klass) const {
    if (klass < 0 || klass >= kSeverityClassCount) {
        throw ValidationError("class index outside [0,9]");
    }
    return 0.5 * (edges_[klass] + edges_[klass + 1]);
}

std::vector<double> SeverityBinning::edges_as_vector() const {
    return std::vector<double>(edges_.begin(), edges_.end());
}

}  // namespace rascore
