#pragma once

#include <string>
#include <vector>

#include "rascore/binning.hpp"
#include "rascore/dataset.hpp"
#include "rascore/losses.hpp"
#include "rascore/model.hpp"
#include "rascore/preprocess.hpp"

namespace rascore {

enum class TrainTask { bone_age, svdh_regression, svdh_classification };
enum class LossKind { mse, smooth, cross_entropy };

std::string to_string(TrainTask task);
std::string to_string(LossKind loss);
TrainTask train_task_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);

/// Optimization settings. Paper-scale defaults: SGD with lr 0.001, weight
/// decay 0.001, momentum 0.9, no schedule; 100 epochs for the SvdH tasks and
/// 50 for bone-age pretraining; batch size 4 or 16.
struct TrainConfig {
    TrainTask task = TrainTask::svdh_regression;
    int epochs = 100;
    int batch_size = 4;
    double learning_rate = 0.001;
    double weight_decay = 0.001;
    double momentum = 0.9;
    LossKind loss = LossKind::mse;
    std::uint64_t seed = 0;
    AugmentPolicy augment;
    SeverityBinning binning = SeverityBinning::default_binning();
    SmoothLossParams smooth_params;
};

void validate_train_config(const TrainConfig& config);

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_mae = 0.0;  // raw-score units for regression, class distance otherwise
    double wall_seconds = 0.0;
};

struct TrainResult {
    Checkpoint best_checkpoint;
    std::vector<EpochStats> history;
    int best_epoch = 0;  // 1-based
};

/// Index (1-based) of the epoch with minimal validation loss; earliest wins
/// ties.
int select_best_epoch(const std::vector<EpochStats>& history);

/// Runs the full optimization loop: per-epoch shuffled passes over the train
/// split with augmentation, validation loss after every epoch, and selection
/// of the best-validation checkpoint. Deterministic for a fixed config seed.
/// Throws TrainingError naming epoch and batch if the loss goes non-finite.
TrainResult train(Model& model, const Manifest& manifest, const TrainConfig& config);

void write_history_jsonl(const std::vector<EpochStats>& history, const std::string& path);

/// Inference over records with the deterministic eval preprocessing.
/// Regression outputs are destandardized back to score units.
std::vector<double> predict_scores(Model& model, const std::vector<const ImageRecord*>& records,
                                   const Stats& pixel_stats, const Stats& target_stats,
                                   int target_size, int batch_size);
/// Raw (n,10) logits for classification models.
Tensor predict_logits(Model& model, const std::vector<const ImageRecord*>& records,
                      const Stats& pixel_stats, int target_size, int batch_size);

}  // namespace rascore
