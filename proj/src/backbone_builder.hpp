#pragma once

#include <memory>

#include "rascore/layers.hpp"
#include "rascore/model.hpp"

namespace rascore::detail {

struct BackboneBuild {
    std::unique_ptr<Sequential> features;
    int feature_channels = 0;
};

/// Assembles the feature extractor for the requested backbone (full or
/// desk-scale) with hierarchical parameter names: stem.*, stage{1..4}.* for
/// ResNets, stem.*, stack{1..7}.*, top.* for MobileNetV2.
BackboneBuild build_backbone(const ModelSpec& spec, Rng& rng);

}  // namespace rascore::detail
