#pragma once

#include <cstdint>
#include <string>

#include "rascore/config.hpp"

namespace rascore {

struct SynthesizeArgs {
    int count = 0;
    int side_px = 64;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool force = false;
};

/// Writes `count` phantom PNGs plus a manifest.csv (and run.json) to the
/// output directory. Refuses a non-empty directory unless `force` is set.
void cmd_synthesize(const SynthesizeArgs& args);

/// Bone-age pretraining: trains a regression model on the configured manifest
/// and saves bone_age.ckpt, history.jsonl and run.json.
void cmd_pretrain(const RunConfig& config);

/// SvdH training (regression or classification), optionally transferring from
/// model.init_checkpoint. Saves model.ckpt, history.jsonl and run.json.
void cmd_train(const RunConfig& config);

/// Either evaluates a checkpoint on a manifest split (metrics.json,
/// predictions.csv and a scatter or confusion figure), or — when
/// evaluate.predictions_csv is set — computes the agreement report of a
/// two-column score CSV directly.
void cmd_evaluate(const RunConfig& config);

/// Fits the linear stacker on the fit split's member predictions, saves
/// ensemble.json, and evaluates the stack on the test split.
void cmd_stack(const RunConfig& config);

/// Selects TP/TN/FP/FN exemplars, renders Grad-CAM overlays for them and
/// writes an index report.json.
void cmd_explain(const RunConfig& config);

}  // namespace rascore
