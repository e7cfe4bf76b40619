#pragma once

#include <string>
#include <vector>

#include "rascore/common.hpp"
#include "rascore/model.hpp"

namespace rascore {

enum class Split { train, validation, test };
enum class Task { svdh, bone_age };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

/// One radiograph row of a manifest: identifier, image location, target value
/// (SvdH total, or bone age in months for pretraining) and fixed split.
struct ImageRecord {
    std::string id;
    std::string image_path;
    double target = 0.0;
    Split split = Split::train;
};

/// A validated manifest. target_stats are computed from the train split only.
struct Manifest {
    std::vector<ImageRecord> records;
    Task task = Task::svdh;
    Stats target_stats;

    std::vector<const ImageRecord*> split_records(Split split) const;
};

/// Parses a CSV with header exactly `id,image_path,target,split`. Image paths
/// are resolved relative to the manifest's directory and must exist. Parse
/// errors carry the offending row number.
Manifest load_manifest(const std::string& path, Task task);

/// z-score with the train-split statistics; sd must be positive.
double standardize_target(double y, const Stats& stats);
double destandardize_target(double z, const Stats& stats);

}  // namespace rascore
