#include "rascore/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rascore/optimizer.hpp"

namespace rascore {

std::string to_string(TrainTask task) {
    switch (task) {
        case TrainTask::bone_age: return "bone_age";
        case TrainTask::svdh_regression: return "svdh_regression";
        case TrainTask::svdh_classification: return "svdh_classification";
    }
    return "?";
}

std::string to_string(LossKind loss) {
    switch (loss) {
        case LossKind::mse: return "mse";
        case LossKind::smooth: return "smooth";
        case LossKind::cross_entropy: return "cross_entropy";
    }
    return "?";
}

TrainTask train_task_from_string(const std::string& s) {
    if (s == "bone_age") return TrainTask::bone_age;
    if (s == "svdh_regression") return TrainTask::svdh_regression;
    if (s == "svdh_classification") return TrainTask::svdh_classification;
    throw ConfigError("unknown task '" + s + "' (expected bone_age|svdh_regression|svdh_classification)");
}

LossKind loss_from_string(const std::string& s) {
    if (s == "mse") return LossKind::mse;
    if (s == "smooth") return LossKind::smooth;
    if (s == "cross_entropy") return LossKind::cross_entropy;
    throw ConfigError("unknown loss '" + s + "' (expected mse|smooth|cross_entropy)");
}

void validate_train_config(const TrainConfig& config) {
    const bool classification = config.task == TrainTask::svdh_classification;
    if (classification && config.loss != LossKind::cross_entropy) {
        throw ConfigError("classification training requires the cross_entropy loss");
    }
    if (!classification && config.loss == LossKind::cross_entropy) {
        throw ConfigError("cross_entropy loss requires the classification task");
    }
    if (config.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (config.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (config.weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (config.momentum < 0.0 || config.momentum >= 1.0) {
        throw ConfigError("momentum must be in [0,1)");
    }
    validate_policy(config.augment);
}

int select_best_epoch(const std::vector<EpochStats>& history) {
    if (history.empty()) throw ValidationError("empty training history");
    int best = 0;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].val_loss < history[static_cast<std::size_t>(best)].val_loss) {
            best = static_cast<int>(i);
        }
    }
    return history[static_cast<std::size_t>(best)].epoch;
}

namespace {

Tensor batch_tensor(const std::vector<GrayImage>& images) {
    const int batch = static_cast<int>(images.size());
    const int height = images.front().height, width = images.front().width;
    Tensor x({batch, 1, height, width});
    double* out = x.data();
    for (const GrayImage& image : images) {
        std::copy(image.pixels.begin(), image.pixels.end(), out);
        out += image.size();
    }
    return x;
}

struct BatchTargets {
    std::vector<double> standardized;  // regression
    std::vector<int> classes;          // classification
};

Stats streaming_pixel_stats(const std::vector<const ImageRecord*>& train_records, int target_size) {
    if (train_records.empty()) throw ValidationError("pixel statistics require training images");
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const ImageRecord* record : train_records) {
        const GrayImage resized =
            resize_bilinear(load_gray_image(record->image_path), target_size, target_size);
        for (double v : resized.pixels) {
            sum += v;
            sq += v * v;
        }
        count += resized.size();
    }
    const double mean = sum / static_cast<double>(count);
    const double var = sq / static_cast<double>(count) - mean * mean;
    if (var < 1e-15) throw ValidationError("training pixels have zero variance");
    return {mean, std::sqrt(var)};
}

}  // namespace

TrainResult train(Model& model, const Manifest& manifest, const TrainConfig& config) {
    validate_train_config(config);
    const bool classification = config.task == TrainTask::svdh_classification;
    if (classification != (model.spec().head == HeadKind::classification)) {
        throw ConfigError("model head does not match the training task");
    }

    auto train_records = manifest.split_records(Split::train);
    auto val_records = manifest.split_records(Split::validation);
    if (train_records.empty()) throw ValidationError("manifest has no training rows");
    if (val_records.empty()) throw ValidationError("manifest has no validation rows");

    const int target_size = config.augment.target_size;
    const Stats pixel_stats = streaming_pixel_stats(train_records, target_size);
    const Stats target_stats = manifest.target_stats;
    if (!classification && target_stats.sd <= 0.0) {
        throw ConfigError("regression training requires target sd > 0");
    }

    auto encode_targets = [&](const std::vector<const ImageRecord*>& records) {
        BatchTargets targets;
        for (const ImageRecord* r : records) {
            if (classification) {
                targets.classes.push_back(config.binning.score_to_class(r->target));
            } else {
                targets.standardized.push_back(standardize_target(r->target, target_stats));
            }
        }
        return targets;
    };

    // Precompute validation targets once; validation order is fixed.
    const BatchTargets val_targets = encode_targets(val_records);

    SgdOptimizer optimizer(model.parameters(), config.learning_rate, config.momentum,
                           config.weight_decay);

    auto compute_batch_loss = [&](const Tensor& out, const BatchTargets& targets, std::size_t offset,
                                  std::size_t count, std::vector<double>* residuals_out,
                                  Tensor* dout) -> double {
        if (classification) {
            std::vector<int> labels(targets.classes.begin() + static_cast<std::ptrdiff_t>(offset),
                                    targets.classes.begin() + static_cast<std::ptrdiff_t>(offset + count));
            const double loss = cross_entropy_loss(out, labels);
            if (dout) *dout = cross_entropy_grad(out, labels);
            return loss;
        }
        std::vector<double> residuals(count);
        for (std::size_t i = 0; i < count; ++i) {
            residuals[i] = out.at2(static_cast<int>(i), 0) - targets.standardized[offset + i];
        }
        double loss;
        std::vector<double> grad;
        if (config.loss == LossKind::mse) {
            loss = mse_loss(residuals);
            if (dout) grad = mse_loss_grad(residuals);
        } else {
            loss = smooth_loss(residuals, config.smooth_params);
            if (dout) grad = smooth_loss_grad(residuals, config.smooth_params);
        }
        if (dout) {
            *dout = Tensor({static_cast<int>(count), 1});
            for (std::size_t i = 0; i < count; ++i) (*dout)[static_cast<std::int64_t>(i)] = grad[i];
        }
        if (residuals_out) *residuals_out = std::move(residuals);
        return loss;
    };

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    Checkpoint best;

    std::vector<std::size_t> order(train_records.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();

        Rng shuffle_rng = derived_rng(config.seed, 1000u + static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        Rng augment_rng = derived_rng(config.seed, 2000u + static_cast<std::uint64_t>(epoch));

        double loss_sum = 0.0;
        double mae_sum = 0.0;
        std::size_t mae_count = 0;
        int batch_count = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count =
                std::min<std::size_t>(config.batch_size, order.size() - start);
            std::vector<GrayImage> images;
            images.reserve(count);
            BatchTargets targets;
            for (std::size_t i = 0; i < count; ++i) {
                const ImageRecord* record = train_records[order[start + i]];
                images.push_back(prepare_train(load_gray_image(record->image_path), config.augment,
                                               pixel_stats, augment_rng));
                if (classification) {
                    targets.classes.push_back(config.binning.score_to_class(record->target));
                } else {
                    targets.standardized.push_back(standardize_target(record->target, target_stats));
                }
            }

            const Tensor x = batch_tensor(images);
            const Tensor out = model.forward(x, /*train=*/true);
            std::vector<double> residuals;
            Tensor dout;
            const double loss = compute_batch_loss(out, targets, 0, count, &residuals, &dout);
            ++batch_count;
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << ", batch " << batch_count;
                throw TrainingError(msg.str());
            }
            loss_sum += loss;

            if (classification) {
                for (std::size_t i = 0; i < count; ++i) {
                    int argmax = 0;
                    for (int k = 1; k < kSeverityClassCount; ++k) {
                        if (out.at2(static_cast<int>(i), k) > out.at2(static_cast<int>(i), argmax)) {
                            argmax = k;
                        }
                    }
                    mae_sum += std::abs(argmax - targets.classes[i]);
                }
            } else {
                for (double r : residuals) mae_sum += std::abs(r) * target_stats.sd;
            }
            mae_count += count;

            optimizer.zero_grad();
            model.backward(dout);
            optimizer.step();
        }

        // Validation in eval mode, fixed order.
        double val_loss;
        if (classification) {
            Tensor logits({static_cast<int>(val_records.size()), kSeverityClassCount});
            std::size_t row = 0;
            for (std::size_t start = 0; start < val_records.size();
                 start += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t count =
                    std::min<std::size_t>(config.batch_size, val_records.size() - start);
                std::vector<GrayImage> images;
                for (std::size_t i = 0; i < count; ++i) {
                    images.push_back(prepare_eval(load_gray_image(val_records[start + i]->image_path),
                                                  target_size, pixel_stats));
                }
                const Tensor out = model.forward(batch_tensor(images), /*train=*/false);
                for (std::size_t i = 0; i < count; ++i) {
                    for (int k = 0; k < kSeverityClassCount; ++k) {
                        logits.at2(static_cast<int>(row), k) = out.at2(static_cast<int>(i), k);
                    }
                    ++row;
                }
            }
            val_loss = cross_entropy_loss(logits, val_targets.classes);
        } else {
            std::vector<double> residuals;
            residuals.reserve(val_records.size());
            for (std::size_t start = 0; start < val_records.size();
                 start += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t count =
                    std::min<std::size_t>(config.batch_size, val_records.size() - start);
                std::vector<GrayImage> images;
                for (std::size_t i = 0; i < count; ++i) {
                    images.push_back(prepare_eval(load_gray_image(val_records[start + i]->image_path),
                                                  target_size, pixel_stats));
                }
                const Tensor out = model.forward(batch_tensor(images), /*train=*/false);
                for (std::size_t i = 0; i < count; ++i) {
                    residuals.push_back(out.at2(static_cast<int>(i), 0) -
                                        val_targets.standardized[start + i]);
                }
            }
            val_loss = config.loss == LossKind::mse ? mse_loss(residuals)
                                                    : smooth_loss(residuals, config.smooth_params);
        }
        if (!std::isfinite(val_loss)) {
            std::ostringstream msg;
            msg << "non-finite validation loss at epoch " << epoch;
            throw TrainingError(msg.str());
        }

        const auto epoch_end = std::chrono::steady_clock::now();
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(batch_count);
        stats.val_loss = val_loss;
        stats.train_mae = mae_sum / static_cast<double>(mae_count);
        stats.wall_seconds = std::chrono::duration<double>(epoch_end - epoch_start).count();
        result.history.push_back(stats);

        if (val_loss < best_val) {
            best_val = val_loss;
            result.best_epoch = epoch;
            best = snapshot(model, to_string(config.task), target_stats, pixel_stats, target_size);
        }
    }

    result.best_checkpoint = std::move(best);
    return result;
}

void write_history_jsonl(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write history: " + path);
    for (const EpochStats& s : history) {
        nlohmann::json j{{"epoch", s.epoch},
                         {"train_loss", s.train_loss},
                         {"val_loss", s.val_loss},
                         {"train_mae", s.train_mae},
                         {"wall_seconds", s.wall_seconds}};
        out << j.dump() << "\n";
    }
}

std::vector<double> predict_scores(Model& model, const std::vector<const ImageRecord*>& records,
                                   const Stats& pixel_stats, const Stats& target_stats,
                                   int target_size, int batch_size) {
    if (model.spec().head != HeadKind::regression) {
        throw ConfigError("predict_scores requires a regression head");
    }
    std::vector<double> scores;
    scores.reserve(records.size());
    for (std::size_t start = 0; start < records.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t count = std::min<std::size_t>(batch_size, records.size() - start);
        std::vector<GrayImage> images;
        for (std::size_t i = 0; i < count; ++i) {
            images.push_back(
                prepare_eval(load_gray_image(records[start + i]->image_path), target_size, pixel_stats));
        }
        const Tensor out = model.forward(batch_tensor(images), /*train=*/false);
        for (std::size_t i = 0; i < count; ++i) {
            scores.push_back(destandardize_target(out.at2(static_cast<int>(i), 0), target_stats));
        }
    }
    return scores;
}

Tensor predict_logits(Model& model, const std::vector<const ImageRecord*>& records,
                      const Stats& pixel_stats, int target_size, int batch_size) {
    if (model.spec().head != HeadKind::classification) {
        throw ConfigError("predict_logits requires a classification head");
    }
    Tensor logits({static_cast<int>(records.size()), kSeverityClassCount});
    std::size_t row = 0;
    for (std::size_t start = 0; start < records.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t count = std::min<std::size_t>(batch_size, records.size() - start);
        std::vector<GrayImage> images;
        for (std::size_t i = 0; i < count; ++i) {
            images.push_back(
                prepare_eval(load_gray_image(records[start + i]->image_path), target_size, pixel_stats));
        }
        const Tensor out = model.forward(batch_tensor(images), /*train=*/false);
        for (std::size_t i = 0; i < count; ++i) {
            for (int k = 0; k < kSeverityClassCount; ++k) {
                logits.at2(static_cast<int>(row), k) = out.at2(static_cast<int>(i), k);
            }
            ++row;
        }
    }
    return logits;
}

}  // namespace rascore
