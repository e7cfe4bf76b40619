#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rascore/layers.hpp"
#include "rascore/tensor.hpp"

namespace rascore {

enum class BackboneKind { resnet34, resnet50, mobilenetv2 };
enum class HeadKind { regression, classification };
enum class FreezeScheme { none, rbs1, rbs2, irbs2, irbs3 };

std::string to_string(BackboneKind kind);
std::string to_string(HeadKind kind);
std::string to_string(FreezeScheme scheme);
BackboneKind backbone_from_string(const std::string& s);
HeadKind head_from_string(const std::string& s);
FreezeScheme freeze_from_string(const std::string& s);

inline int head_width(HeadKind kind) { return kind == HeadKind::regression ? 1 : 10; }

/// What to build: backbone, task head, freezing scheme, scale. The desk-scale
/// flag selects a width/depth-reduced variant of the same topology so every
/// code path (heads, freezing, transfer, Grad-CAM) can run on a CPU in tests.
struct ModelSpec {
    BackboneKind backbone = BackboneKind::resnet34;
    HeadKind head = HeadKind::regression;
    FreezeScheme freeze = FreezeScheme::none;
    bool desk_scale = false;
};

/// Throws ConfigError for invalid combinations (RBs-* schemes are only valid
/// for ResNets, IRBs-* only for MobileNetV2).
void validate_spec(const ModelSpec& spec);

/// Partition of all learnable parameter names. The task head is always in the
/// trainable list.
struct FreezePlan {
    std::vector<std::string> frozen_parameter_names;
    std::vector<std::string> trainable_parameter_names;
};

/// Mean/SD pair used for z-score standardization of targets and pixels.
struct Stats {
    double mean = 0.0;
    double sd = 1.0;
};

/// A backbone with a global-average-pool head. Forward caches the final
/// activation map (the input to the pooling layer) for Grad-CAM.
class Model {
public:
    Model(const ModelSpec& spec, std::uint64_t seed);

    Tensor forward(const Tensor& batch, bool train);
    /// Full backprop; accumulates parameter gradients, returns d(input).
    Tensor backward(const Tensor& dout);

    /// Last activation map before pooling, from the most recent forward.
    const Tensor& features() const { return features_; }
    /// Gradient of the head output with respect to the feature map, computed
    /// through the pooling and fully connected layers only. Parameter
    /// gradients are not touched.
    Tensor feature_grad(const Tensor& dout) const;

    const ModelSpec& spec() const { return spec_; }
    int feature_channels() const { return feature_channels_; }
    const std::vector<Parameter*>& parameters() { return params_; }
    const std::vector<BufferVar*>& buffers() { return buffers_; }
    Linear& head() { return *head_; }
    void zero_grad();

    FreezePlan freeze_plan() const;
    void reinitialize_head(std::uint64_t seed);

private:
    void apply_freeze();

    ModelSpec spec_;
    std::unique_ptr<Sequential> backbone_;
    std::unique_ptr<GlobalAvgPool> pool_;
    std::unique_ptr<Linear> head_;
    int feature_channels_ = 0;
    std::vector<Parameter*> params_;
    std::vector<BufferVar*> buffers_;
    std::vector<BatchNorm2d*> batchnorms_;
    Tensor features_;
};

/// Name prefixes frozen by a scheme, e.g. RBs-2 -> {stem., stage1., stage2.}.
std::vector<std::string> freeze_prefixes(const ModelSpec& spec);

/// Everything needed for standalone inference: identity, weights, running
/// statistics and the standardization constants of the training run.
struct Checkpoint {
    ModelSpec spec;                // freeze scheme is not persisted
    std::string task;              // bone_age | svdh_regression | svdh_classification
    int input_size = 1024;         // square resize the model was trained at
    Stats target_stats;
    Stats pixel_stats;
    std::vector<std::pair<std::string, Tensor>> params;
    std::vector<std::pair<std::string, Tensor>> buffers;
};

Checkpoint snapshot(Model& model, const std::string& task, const Stats& target_stats,
                    const Stats& pixel_stats, int input_size);

/// Binary container: magic, version, JSON metadata, raw float64 tensors.
/// Round-trips are bit exact.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Restores a model that exactly matches the checkpoint (same backbone, same
/// head). Throws CheckpointError listing missing/unexpected names otherwise.
Model model_from_checkpoint(const Checkpoint& ckpt);

/// Builds a model per `spec` and copies all backbone weights and running
/// statistics from the source checkpoint. The task head is re-initialized
/// when its width differs from the source head; otherwise it is copied too.
Model transfer_weights(const Checkpoint& source, const ModelSpec& spec, std::uint64_t seed);

}  // namespace rascore
