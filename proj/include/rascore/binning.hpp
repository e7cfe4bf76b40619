#pragma once

#include <array>
#include <vector>

#include "rascore/common.hpp"

namespace rascore {

inline constexpr int kSeverityClassCount = 10;

/// Ordered partition of the SvdH range [0,280] into 10 severity classes.
/// Class k covers [edges[k], edges[k+1]), the last bin is closed at 280.
/// Bin widths must be non-decreasing (narrow bins at the mild end).
class SeverityBinning {
public:
    /// Validates and adopts the given 11 edges.
    static SeverityBinning from_edges(const std::vector<double>& edges);

    /// Edges 0, 5, 10, 15, 20, 30, 45, 70, 110, 180, 280.
    static SeverityBinning default_binning();

    /// Class index in [0,9] for a total in [0,280]; throws ValidationError
    /// outside that range.
    int score_to_class(double total) const;

    double midpoint(int klass) const;
    const std::array<double, kSeverityClassCount + 1>& edges() const { return edges_; }
    std::vector<double> edges_as_vector() const;

private:
    SeverityBinning() = default;
    std::array<double, kSeverityClassCount + 1> edges_{};
};

}  // namespace rascore
