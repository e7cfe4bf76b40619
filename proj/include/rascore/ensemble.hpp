#pragma once

#include <array>
#include <string>
#include <vector>

#include "rascore/binning.hpp"
#include "rascore/model.hpp"
#include "rascore/tensor.hpp"

namespace rascore {

inline constexpr int kEnsembleMembers = 3;

/// How member outputs are stacked:
///  - regression: 3 member scores -> 1 score
///  - classification_all: 3 x 10 member logits -> 10 logits jointly
///  - classification_single: per class k, the 3 members' class-k outputs -> logit k
enum class StackMode { regression, classification_all, classification_single };

std::string to_string(StackMode mode);
StackMode stack_mode_from_string(const std::string& s);

/// Trained linear stacker. Regression weights are 1x3, all-classes 10x30
/// (member-major columns: member 0 classes 0..9, then member 1, member 2),
/// single-class 10x3 (row k holds the three class-k coefficients).
struct EnsembleSpec {
    StackMode mode = StackMode::regression;
    std::array<std::string, kEnsembleMembers> member_paths;
    std::vector<double> weights;
    std::vector<double> bias;
    Stats target_stats;  // destandardization for regression stacking

    std::string to_json() const;
    static EnsembleSpec from_json(const std::string& text);
};

/// Optimizer settings for the stacker fit. Same SGD as model training; weight
/// decay defaults to zero so the regression fit converges to the
/// least-squares solution.
struct StackFitConfig {
    double learning_rate = 0.001;
    double momentum = 0.9;
    double weight_decay = 0.0;
    int batch_size = 16;
    int epochs = 1500;
    std::uint64_t seed = 0;
};

/// Fits the linear map by mini-batch gradient descent on precomputed member
/// predictions. Regression: member_outputs is (n,3) standardized scores and
/// targets are standardized scores; minimizes MSE. Classification modes:
/// member_outputs is (n,30) member logits and targets are class labels cast
/// to double; minimizes cross-entropy on the stacked logits.
EnsembleSpec fit_stacker(const Tensor& member_outputs, const std::vector<double>& targets,
                         StackMode mode, const StackFitConfig& config);

/// Closed-form ordinary least squares for regression mode; the oracle the
/// gradient-descent path is checked against.
EnsembleSpec fit_stacker_least_squares(const Tensor& member_outputs,
                                       const std::vector<double>& targets);

/// Applies the stacker. Regression input (n,3) standardized member scores ->
/// destandardized scores. Classification input (n,30) member logits -> (n,10)
/// stacked logits.
std::vector<double> predict_stacked_scores(const EnsembleSpec& spec, const Tensor& member_outputs);
Tensor predict_stacked_logits(const EnsembleSpec& spec, const Tensor& member_outputs);
std::vector<int> predict_stacked_classes(const EnsembleSpec& spec, const Tensor& member_outputs);

}  // namespace rascore
