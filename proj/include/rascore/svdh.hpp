#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rascore/common.hpp"

namespace rascore {

enum class Hand { left, right };

/// The 16 sites per hand/wrist assessed for bone erosion.
enum class ErosionArea {
    pip2,
    pip3,
    pip4,
    pip5,
    thumb_ip,
    mcp1,
    mcp2,
    mcp3,
    mcp4,
    mcp5,
    first_metacarpal,
    multangulars,
    scaphoid,
    lunate,
    radius,
    ulna,
};
inline constexpr int kErosionAreaCount = 16;

/// The 15 joints per hand/wrist assessed for joint space narrowing.
enum class JsnJoint {
    pip2,
    pip3,
    pip4,
    pip5,
    mcp1,
    mcp2,
    mcp3,
    mcp4,
    mcp5,
    cmc3,
    cmc4,
    cmc5,
    trapezium_scaphoid,
    capitate_scaphoid_lunate,
    radiocarpal,
};
inline constexpr int kJsnJointCount = 15;

inline constexpr int kMaxErosionPerArea = 5;
inline constexpr int kMaxJsnGrade = 4;
inline constexpr double kMaxTotalScore = 280.0;  // 2*16*5 erosion + 2*15*4 JSN

std::string to_string(Hand hand);
std::string to_string(ErosionArea area);
std::string to_string(JsnJoint joint);

/// Erosion record for one (hand, area) site. Each component is one discrete
/// erosion event graded 1 (discrete), 2 (large, not passing midline) or
/// 3 (large, passing midline). The effective site score is the component sum
/// clamped to 5.
struct ErosionEntry {
    Hand hand = Hand::left;
    ErosionArea area = ErosionArea::pip2;
    std::vector<int> components;
};

/// JSN record for one (hand, joint) site, graded 0 (normal) to 4 (ankylosis).
struct JsnEntry {
    Hand hand = Hand::left;
    JsnJoint joint = JsnJoint::pip2;
    int grade = 0;
};

/// A full SvdH assessment. Either itemised entries, or only the aggregate
/// total when that is all the data source provides (dataset labels are reader
/// averages and may be non-integer).
struct SvdhScore {
    std::vector<ErosionEntry> erosion_entries;
    std::vector<JsnEntry> jsn_entries;
    std::optional<double> raw_total;
};

/// Effective erosion score for one site: min(sum(components), 5).
/// Throws ValidationError naming the offending component if any component is
/// outside {1,2,3}.
int erosion_area_score(const ErosionEntry& entry);

/// Total SvdH score over hands and wrists, in [0,280]. Validates component
/// and grade ranges and rejects duplicate (hand, area) / (hand, joint)
/// entries. If only raw_total is present it is validated and returned
/// unchanged.
double total_score(const SvdhScore& score);

}  // namespace rascore
