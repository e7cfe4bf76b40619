#include "rascore/svdh.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace rascore {

std::string to_string(Hand hand) {
    return hand == Hand::left ? "left" : "right";
}

std::string to_string(ErosionArea area) {
    switch (area) {
        case ErosionArea::pip2: return "PIP2";
        case ErosionArea::pip3: return "PIP3";
        case ErosionArea::pip4: return "PIP4";
        case ErosionArea::pip5: return "PIP5";
        case ErosionArea::thumb_ip: return "IP";
        case ErosionArea::mcp1: return "MCP1";
        case ErosionArea::mcp2: return "MCP2";
        case ErosionArea::mcp3: return "MCP3";
        case ErosionArea::mcp4: return "MCP4";
        case ErosionArea::mcp5: return "MCP5";
        case ErosionArea::first_metacarpal: return "first metacarpal";
        case ErosionArea::multangulars: return "multangulars";
        case ErosionArea::scaphoid: return "scaphoid";
        case ErosionArea::lunate: return "lunate";
        case ErosionArea::radius: return "radius";
        case ErosionArea::ulna: return "ulna";
    }
    return "?";
}

std::string to_string(JsnJoint joint) {
    switch (joint) {
        case JsnJoint::pip2: return "PIP2";
        case JsnJoint::pip3: return "PIP3";
        case JsnJoint::pip4: return "PIP4";
        case JsnJoint::pip5: return "PIP5";
        case JsnJoint::mcp1: return "MCP1";
        case JsnJoint::mcp2: return "MCP2";
        case JsnJoint::mcp3: return "MCP3";
        case JsnJoint::mcp4: return "MCP4";
        case JsnJoint::mcp5: return "MCP5";
        case JsnJoint::cmc3: return "CMC3";
        case JsnJoint::cmc4: return "CMC4";
        case JsnJoint::cmc5: return "CMC5";
        case JsnJoint::trapezium_scaphoid: return "trapezium-scaphoid";
        case JsnJoint::capitate_scaphoid_lunate: return "capitate-scaphoid-lunate";
        case JsnJoint::radiocarpal: return "radiocarpal";
    }
    return "?";
}

int erosion_area_score(const ErosionEntry& entry) {
    int sum = 0;
    for (std::size_t i = 0; i < entry.components.size(); ++i) {
        const int c = entry.components[i];
        if (c < 1 || c > 3) {
            std::ostringstream msg;
            msg << "erosion component " << c << " at index " << i << " for " << to_string(entry.hand)
                << " " << to_string(entry.area) << " is outside {1,2,3}";
            throw ValidationError(msg.str());
        }
        sum += c;
    }
    return std::min(sum, kMaxErosionPerArea);
}

double total_score(const SvdhScore& score) {
    if (score.raw_total.has_value()) {
        const double raw = *score.raw_total;
        if (!std::isfinite(raw) || raw < 0.0 || raw > kMaxTotalScore) {
            std::ostringstream msg;
            msg << "raw total " << raw << " is outside [0,280]";
            throw ValidationError(msg.str());
        }
        return raw;
    }

    std::set<std::pair<Hand, ErosionArea>> seen_areas;
    std::set<std::pair<Hand, JsnJoint>> seen_joints;
    double total = 0.0;

    for (const auto& entry : score.erosion_entries) {
        if (!seen_areas.insert({entry.hand, entry.area}).second) {
            throw ValidationError("duplicate erosion entry for " + to_string(entry.hand) + " " +
                                  to_string(entry.area));
        }
        total += erosion_area_score(entry);
    }
    for (const auto& entry : score.jsn_entries) {
        if (!seen_joints.insert({entry.hand, entry.joint}).second) {
            throw ValidationError("duplicate JSN entry for " + to_string(entry.hand) + " " +
                                  to_string(entry.joint));
        }
        if (entry.grade < 0 || entry.grade > kMaxJsnGrade) {
            std::ostringstream msg;
            msg << "JSN grade " << entry.grade << " for " << to_string(entry.hand) << " "
                << to_string(entry.joint) << " is outside [0,4]";
            throw ValidationError(msg.str());
        }
        total += entry.grade;
    }
    return total;
}

}  // namespace rascore
