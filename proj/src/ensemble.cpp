#include "rascore/ensemble.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rascore/dataset.hpp"
#include "rascore/losses.hpp"

namespace rascore {

std::string to_string(StackMode mode) {
    switch (mode) {
        case StackMode::regression: return "regression";
        case StackMode::classification_all: return "all_classes";
        case StackMode::classification_single: return "single_class";
    }
    return "?";
}

StackMode stack_mode_from_string(const std::string& s) {
    if (s == "regression") return StackMode::regression;
    if (s == "all_classes") return StackMode::classification_all;
    if (s == "single_class") return StackMode::classification_single;
    throw ConfigError("unknown stacking mode '" + s + "' (expected regression|all_classes|single_class)");
}

namespace {

constexpr int kAllInputs = kEnsembleMembers * kSeverityClassCount;

void check_member_outputs(const Tensor& member_outputs, StackMode mode) {
    const int expected = mode == StackMode::regression ? kEnsembleMembers : kAllInputs;
    if (member_outputs.ndim() != 2 || member_outputs.dim(1) != expected) {
        throw ValidationError("member outputs must be (n," + std::to_string(expected) + ") for " +
                              to_string(mode) + " stacking");
    }
    if (member_outputs.dim(0) < 1) throw ValidationError("member outputs are empty");
}

std::vector<int> labels_from_targets(const std::vector<double>& targets) {
    std::vector<int> labels;
    labels.reserve(targets.size());
    for (double t : targets) {
        const int k = static_cast<int>(std::llround(t));
        if (std::abs(t - k) > 1e-9 || k < 0 || k >= kSeverityClassCount) {
            throw ValidationError("classification stacking targets must be class indices in [0,9]");
        }
        labels.push_back(k);
    }
    return labels;
}

/// Stacked logits for one classification sample.
void stacked_logits_row(const EnsembleSpec& spec, const double* x, double* z) {
    if (spec.mode == StackMode::classification_all) {
        for (int k = 0; k < kSeverityClassCount; ++k) {
            double acc = spec.bias[static_cast<std::size_t>(k)];
            for (int j = 0; j < kAllInputs; ++j) {
                acc += spec.weights[static_cast<std::size_t>(k) * kAllInputs + j] * x[j];
            }
            z[k] = acc;
        }
    } else {
        for (int k = 0; k < kSeverityClassCount; ++k) {
            double acc = spec.bias[static_cast<std::size_t>(k)];
            for (int m = 0; m < kEnsembleMembers; ++m) {
                acc += spec.weights[static_cast<std::size_t>(k) * kEnsembleMembers + m] *
                       x[m * kSeverityClassCount + k];
            }
            z[k] = acc;
        }
    }
}

}  // namespace

EnsembleSpec fit_stacker(const Tensor& member_outputs, const std::vector<double>& targets,
                         StackMode mode, const StackFitConfig& config) {
    check_member_outputs(member_outputs, mode);
    const std::size_t n = static_cast<std::size_t>(member_outputs.dim(0));
    if (targets.size() != n) throw ValidationError("stacker targets misaligned with member outputs");
    if (config.epochs < 1 || config.batch_size < 1 || config.learning_rate <= 0.0) {
        throw ConfigError("invalid stacker fit configuration");
    }

    EnsembleSpec spec;
    spec.mode = mode;
    const int in_dim = mode == StackMode::regression
                           ? kEnsembleMembers
                           : (mode == StackMode::classification_all ? kAllInputs : kEnsembleMembers);
    const int out_dim = mode == StackMode::regression ? 1 : kSeverityClassCount;
    spec.weights.assign(static_cast<std::size_t>(in_dim) * out_dim, 0.0);
    spec.bias.assign(static_cast<std::size_t>(out_dim), 0.0);

    std::vector<int> labels;
    if (mode != StackMode::regression) labels = labels_from_targets(targets);

    std::vector<double> wv(spec.weights.size(), 0.0), bv(spec.bias.size(), 0.0);  // momentum state
    std::vector<double> wg(spec.weights.size()), bg(spec.bias.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng rng = derived_rng(config.seed, 3000u + static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count = std::min<std::size_t>(config.batch_size, n - start);
            std::fill(wg.begin(), wg.end(), 0.0);
            std::fill(bg.begin(), bg.end(), 0.0);

            if (mode == StackMode::regression) {
                for (std::size_t i = 0; i < count; ++i) {
                    const std::size_t row = order[start + i];
                    const double* x = member_outputs.data() + row * kEnsembleMembers;
                    double pred = spec.bias[0];
                    for (int j = 0; j < kEnsembleMembers; ++j) pred += spec.weights[j] * x[j];
                    const double dpred = 2.0 * (pred - targets[row]) / static_cast<double>(count);
                    for (int j = 0; j < kEnsembleMembers; ++j) wg[j] += dpred * x[j];
                    bg[0] += dpred;
                }
            } else {
                Tensor logits({static_cast<int>(count), kSeverityClassCount});
                std::vector<int> batch_labels(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const std::size_t row = order[start + i];
                    stacked_logits_row(spec, member_outputs.data() + row * kAllInputs,
                                       logits.data() + i * kSeverityClassCount);
                    batch_labels[i] = labels[row];
                }
                const Tensor dlogits = cross_entropy_grad(logits, batch_labels);
                for (std::size_t i = 0; i < count; ++i) {
                    const std::size_t row = order[start + i];
                    const double* x = member_outputs.data() + row * kAllInputs;
                    const double* dz = dlogits.data() + i * kSeverityClassCount;
                    for (int k = 0; k < kSeverityClassCount; ++k) {
                        bg[static_cast<std::size_t>(k)] += dz[k];
                        if (mode == StackMode::classification_all) {
                            for (int j = 0; j < kAllInputs; ++j) {
                                wg[static_cast<std::size_t>(k) * kAllInputs + j] += dz[k] * x[j];
                            }
                        } else {
                            for (int m = 0; m < kEnsembleMembers; ++m) {
                                wg[static_cast<std::size_t>(k) * kEnsembleMembers + m] +=
                                    dz[k] * x[m * kSeverityClassCount + k];
                            }
                        }
                    }
                }
            }

            for (std::size_t j = 0; j < spec.weights.size(); ++j) {
                const double g = wg[j] + config.weight_decay * spec.weights[j];
                wv[j] = config.momentum * wv[j] + g;
                spec.weights[j] -= config.learning_rate * wv[j];
            }
            for (std::size_t j = 0; j < spec.bias.size(); ++j) {
                bv[j] = config.momentum * bv[j] + bg[j];
                spec.bias[j] -= config.learning_rate * bv[j];
            }
        }
    }
    return spec;
}

EnsembleSpec fit_stacker_least_squares(const Tensor& member_outputs,
                                       const std::vector<double>& targets) {
    check_member_outputs(member_outputs, StackMode::regression);
    const int n = member_outputs.dim(0);
    if (targets.size() != static_cast<std::size_t>(n)) {
        throw ValidationError("stacker targets misaligned with member outputs");
    }
    Eigen::MatrixXd a(n, kEnsembleMembers + 1);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < kEnsembleMembers; ++j) a(i, j) = member_outputs.at2(i, j);
        a(i, kEnsembleMembers) = 1.0;
        t(i) = targets[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(t);

    EnsembleSpec spec;
    spec.mode = StackMode::regression;
    spec.weights = {sol(0), sol(1), sol(2)};
    spec.bias = {sol(kEnsembleMembers)};
    return spec;
}

std::vector<double> predict_stacked_scores(const EnsembleSpec& spec, const Tensor& member_outputs) {
    if (spec.mode != StackMode::regression) {
        throw ValidationError("score prediction requires a regression stacker");
    }
    check_member_outputs(member_outputs, spec.mode);
    const int n = member_outputs.dim(0);
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double pred = spec.bias[0];
        for (int j = 0; j < kEnsembleMembers; ++j) pred += spec.weights[j] * member_outputs.at2(i, j);
        scores.push_back(destandardize_target(pred, spec.target_stats));
    }
    return scores;
}

Tensor predict_stacked_logits(const EnsembleSpec& spec, const Tensor& member_outputs) {
    if (spec.mode == StackMode::regression) {
        throw ValidationError("logit prediction requires a classification stacker");
    }
    check_member_outputs(member_outputs, spec.mode);
    const int n = member_outputs.dim(0);
    Tensor logits({n, kSeverityClassCount});
    for (int i = 0; i < n; ++i) {
        stacked_logits_row(spec, member_outputs.data() + static_cast<std::size_t>(i) * kAllInputs,
                           logits.data() + static_cast<std::size_t>(i) * kSeverityClassCount);
    }
    return logits;
}

std::vector<int> predict_stacked_classes(const EnsembleSpec& spec, const Tensor& member_outputs) {
    const Tensor logits = predict_stacked_logits(spec, member_outputs);
    std::vector<int> classes;
    classes.reserve(static_cast<std::size_t>(logits.dim(0)));
    for (int i = 0; i < logits.dim(0); ++i) {
        int argmax = 0;
        for (int k = 1; k < kSeverityClassCount; ++k) {
            if (logits.at2(i, k) > logits.at2(i, argmax)) argmax = k;
        }
        classes.push_back(argmax);
    }
    return classes;
}

std::string EnsembleSpec::to_json() const {
    nlohmann::json j{{"mode", rascore::to_string(mode)},
                     {"members", member_paths},
                     {"weights", weights},
                     {"bias", bias},
                     {"target_stats", {{"mean", target_stats.mean}, {"sd", target_stats.sd}}}};
    return j.dump(2);
}

EnsembleSpec EnsembleSpec::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    EnsembleSpec spec;
    spec.mode = stack_mode_from_string(j.at("mode").get<std::string>());
    const auto members = j.at("members").get<std::vector<std::string>>();
    if (members.size() != kEnsembleMembers) {
        throw ValidationError("ensemble spec must list exactly 3 members");
    }
    std::copy(members.begin(), members.end(), spec.member_paths.begin());
    spec.weights = j.at("weights").get<std::vector<double>>();
    spec.bias = j.at("bias").get<std::vector<double>>();
    spec.target_stats = {j.at("target_stats").at("mean").get<double>(),
                         j.at("target_stats").at("sd").get<double>()};

    const std::size_t in_dim = spec.mode == StackMode::regression
                                   ? kEnsembleMembers
                                   : (spec.mode == StackMode::classification_all
                                          ? static_cast<std::size_t>(kAllInputs)
                                          : kEnsembleMembers);
    const std::size_t out_dim = spec.mode == StackMode::regression ? 1 : kSeverityClassCount;
    if (spec.weights.size() != in_dim * out_dim || spec.bias.size() != out_dim) {
        throw ValidationError("ensemble spec weight shapes do not match its mode");
    }
    return spec;
}

}  // namespace rascore
