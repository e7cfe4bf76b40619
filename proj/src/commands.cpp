#include "rascore/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rascore/dataset.hpp"
#include "rascore/figures.hpp"
#include "rascore/gradcam.hpp"
#include "rascore/hashing.hpp"
#include "rascore/metrics.hpp"
#include "rascore/synthetic.hpp"
#include "rascore/training.hpp"

namespace rascore {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
}

void write_run_json(const std::string& out_dir, const std::string& command, std::uint64_t seed,
                    const std::map<std::string, std::string>& config_entries,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
    json j;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config_entries;
    json in = json::object(), out = json::object();
    for (const std::string& p : inputs) in[p] = sha256_file_hex(p);
    for (const std::string& p : outputs) out[p] = sha256_file_hex(p);
    j["inputs"] = in;
    j["outputs"] = out;
    write_text((fs::path(out_dir) / "run.json").string(), j.dump(2));
}

std::string format_target(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

/// Score CSV for agreement reports: optional leading `id` column, then two
/// numeric columns (predicted/reader A, truth/reader B).
std::pair<std::vector<double>, std::vector<double>> read_score_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::istringstream stream(line);
        std::string token;
        while (std::getline(stream, token, ',')) header.push_back(token);
    }
    const bool has_id = !header.empty() && header.front() == "id";
    const std::size_t expected = has_id ? 3 : 2;
    if (header.size() != expected) {
        throw IoError(path + ": expected two score columns (optionally preceded by 'id'), got " +
                      std::to_string(header.size()) + " columns");
    }

    std::vector<double> a, b;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream stream(line);
        std::string token;
        std::vector<std::string> fields;
        while (std::getline(stream, token, ',')) fields.push_back(token);
        if (fields.size() != expected) {
            throw IoError(path + ": row " + std::to_string(row) + ": expected " +
                          std::to_string(expected) + " columns");
        }
        try {
            a.push_back(std::stod(fields[has_id ? 1 : 0]));
            b.push_back(std::stod(fields[has_id ? 2 : 1]));
        } catch (const std::exception&) {
            throw IoError(path + ": row " + std::to_string(row) + ": values are not numeric");
        }
    }
    if (a.empty()) throw IoError(path + ": no score rows");
    return {std::move(a), std::move(b)};
}

std::vector<const ImageRecord*> records_for_split(const Manifest& manifest, const std::string& name) {
    auto records = manifest.split_records(split_from_string(name));
    if (records.empty()) throw ValidationError("manifest has no rows in split '" + name + "'");
    return records;
}

void write_predictions_csv(const std::string& path, const std::vector<const ImageRecord*>& records,
                           const std::vector<double>& predicted) {
    std::ostringstream out;
    out << "id,predicted,truth\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        out << records[i]->id << "," << format_target(predicted[i]) << ","
            << format_target(records[i]->target) << "\n";
    }
    write_text(path, out.str());
}

}  // namespace

void cmd_synthesize(const SynthesizeArgs& args) {
    if (args.count < 1) throw ConfigError("synthesize requires --count >= 1");
    if (args.side_px < 32) throw ConfigError("synthesize requires --size >= 32");
    if (args.out_dir.empty()) throw ConfigError("synthesize requires --out");
    if (fs::exists(args.out_dir) && !fs::is_empty(args.out_dir) && !args.force) {
        throw IoError("output directory " + args.out_dir + " is not empty (use --force to overwrite)");
    }
    ensure_dir(args.out_dir);

    const auto samples = generate_synthetic(args.count, args.side_px, args.seed);
    std::vector<std::string> outputs;
    std::ostringstream manifest;
    manifest << "id,image_path,target,split\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::ostringstream id;
        id << "phantom_" << std::setfill('0') << std::setw(4) << i;
        const std::string file = id.str() + ".png";
        save_gray_png(samples[i].image, (fs::path(args.out_dir) / file).string());
        outputs.push_back((fs::path(args.out_dir) / file).string());
        // Deterministic split pattern: six train rows, then one validation and
        // one test row per group of eight.
        const char* split = (i % 8 == 6) ? "validation" : (i % 8 == 7) ? "test" : "train";
        manifest << id.str() << "," << file << "," << format_target(samples[i].total) << "," << split
                 << "\n";
    }
    const std::string manifest_path = (fs::path(args.out_dir) / "manifest.csv").string();
    write_text(manifest_path, manifest.str());
    outputs.push_back(manifest_path);

    std::map<std::string, std::string> config{{"count", std::to_string(args.count)},
                                              {"size", std::to_string(args.side_px)},
                                              {"out", args.out_dir}};
    write_run_json(args.out_dir, "synthesize", args.seed, config, {}, outputs);
}

namespace {

void run_training_command(const RunConfig& config, const std::string& command, Task manifest_task,
                          const std::string& checkpoint_name) {
    const std::string out_dir = config.get("output.dir");
    ensure_dir(out_dir);
    const std::string manifest_path = config.get("data.manifest");
    if (manifest_path.empty()) throw ConfigError("key 'data.manifest' is required");
    const Manifest manifest = load_manifest(manifest_path, manifest_task);

    const ModelSpec spec = config.model_spec();
    const std::string init = config.get("model.init_checkpoint");
    std::vector<std::string> inputs{manifest_path};

    Model model = [&]() {
        if (init.empty()) return Model(spec, config.get_seed());
        inputs.push_back(init);
        return transfer_weights(load_checkpoint(init), spec, config.get_seed());
    }();

    const TrainConfig train_config = config.train_config();
    TrainResult result = train(model, manifest, train_config);

    const std::string ckpt_path = (fs::path(out_dir) / checkpoint_name).string();
    save_checkpoint(result.best_checkpoint, ckpt_path);
    const std::string history_path = (fs::path(out_dir) / "history.jsonl").string();
    write_history_jsonl(result.history, history_path);

    // Record the resolved settings ('auto' expanded) in the run metadata.
    std::map<std::string, std::string> entries = config.entries();
    entries["train.epochs"] = std::to_string(train_config.epochs);
    entries["train.loss"] = to_string(train_config.loss);
    write_run_json(out_dir, command, config.get_seed(), entries, inputs,
                   {ckpt_path, history_path});
}

}  // namespace

void cmd_pretrain(const RunConfig& config) {
    if (config.task() != TrainTask::bone_age) {
        throw ConfigError("pretrain requires task = bone_age");
    }
    run_training_command(config, "pretrain", Task::bone_age, "bone_age.ckpt");
}

void cmd_train(const RunConfig& config) {
    if (config.task() == TrainTask::bone_age) {
        throw ConfigError("train requires an SvdH task; use pretrain for bone_age");
    }
    run_training_command(config, "train", Task::svdh, "model.ckpt");
}

void cmd_evaluate(const RunConfig& config) {
    const std::string out_dir = config.get("output.dir");
    ensure_dir(out_dir);
    const SeverityBinning binning = config.binning();

    // Direct mode: metrics over a two-column score CSV (also the inter-rater
    // agreement report).
    const std::string csv = config.get("evaluate.predictions_csv");
    if (!csv.empty()) {
        const auto [predicted, truth] = read_score_csv(csv);
        const MetricsReport report = regression_metrics(predicted, truth);
        const std::string metrics_path = (fs::path(out_dir) / "metrics.json").string();
        write_text(metrics_path, report.to_json());
        const std::string scatter_path = (fs::path(out_dir) / "scatter.png").string();
        render_scatter_figure(predicted, truth, scatter_path);
        write_run_json(out_dir, "evaluate", config.get_seed(), config.entries(), {csv},
                       {metrics_path, scatter_path});
        return;
    }

    const std::string ckpt_path = config.get("evaluate.checkpoint");
    if (ckpt_path.empty()) {
        throw ConfigError("evaluate requires 'evaluate.checkpoint' or 'evaluate.predictions_csv'");
    }
    const std::string manifest_path = config.get("data.manifest");
    if (manifest_path.empty()) throw ConfigError("key 'data.manifest' is required");

    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    Model model = model_from_checkpoint(ckpt);
    const Task manifest_task = ckpt.task == "bone_age" ? Task::bone_age : Task::svdh;
    const Manifest manifest = load_manifest(manifest_path, manifest_task);
    const auto records = records_for_split(manifest, config.get("evaluate.split"));
    const int batch_size = config.get_int("train.batch_size");

    std::vector<double> truth;
    for (const ImageRecord* r : records) truth.push_back(r->target);

    std::vector<std::string> outputs;
    if (model.spec().head == HeadKind::regression) {
        const std::vector<double> scores = predict_scores(model, records, ckpt.pixel_stats,
                                                          ckpt.target_stats, ckpt.input_size,
                                                          batch_size);
        const MetricsReport report = regression_metrics(scores, truth);
        const std::string metrics_path = (fs::path(out_dir) / "metrics.json").string();
        write_text(metrics_path, report.to_json());
        outputs.push_back(metrics_path);
        const std::string scatter_path = (fs::path(out_dir) / "scatter.png").string();
        render_scatter_figure(scores, truth, scatter_path);
        outputs.push_back(scatter_path);
        const std::string pred_path = (fs::path(out_dir) / "predictions.csv").string();
        write_predictions_csv(pred_path, records, scores);
        outputs.push_back(pred_path);

        if (ckpt.task == "svdh_regression") {
            // Severity classification via the predicted scores.
            const std::vector<int> pred_classes = regression_to_classification(scores, binning);
            std::vector<int> true_classes;
            for (double t : truth) {
                true_classes.push_back(binning.score_to_class(std::clamp(t, 0.0, kMaxTotalScore)));
            }
            const MetricsReport class_report = classification_metrics(pred_classes, true_classes);
            const std::string class_path = (fs::path(out_dir) / "metrics_classes.json").string();
            write_text(class_path, class_report.to_json());
            outputs.push_back(class_path);
            const std::string confusion_path = (fs::path(out_dir) / "confusion.png").string();
            render_confusion_figure(*class_report.confusion, binning, confusion_path);
            outputs.push_back(confusion_path);
        }
    } else {
        const Tensor logits =
            predict_logits(model, records, ckpt.pixel_stats, ckpt.input_size, batch_size);
        std::vector<int> pred_classes, true_classes;
        std::vector<double> pred_classes_d;
        for (int i = 0; i < logits.dim(0); ++i) {
            int argmax = 0;
            for (int k = 1; k < kSeverityClassCount; ++k) {
                if (logits.at2(i, k) > logits.at2(i, argmax)) argmax = k;
            }
            pred_classes.push_back(argmax);
            pred_classes_d.push_back(argmax);
        }
        for (double t : truth) {
            true_classes.push_back(binning.score_to_class(std::clamp(t, 0.0, kMaxTotalScore)));
        }
        const MetricsReport report = classification_metrics(pred_classes, true_classes);
        const std::string metrics_path = (fs::path(out_dir) / "metrics.json").string();
        write_text(metrics_path, report.to_json());
        outputs.push_back(metrics_path);
        const std::string confusion_path = (fs::path(out_dir) / "confusion.png").string();
        render_confusion_figure(*report.confusion, binning, confusion_path);
        outputs.push_back(confusion_path);
        const std::string pred_path = (fs::path(out_dir) / "predictions.csv").string();
        write_predictions_csv(pred_path, records, pred_classes_d);
        outputs.push_back(pred_path);
    }
    write_run_json(out_dir, "evaluate", config.get_seed(), config.entries(),
                   {ckpt_path, manifest_path}, outputs);
}

void cmd_stack(const RunConfig& config) {
    const std::string out_dir = config.get("output.dir");
    ensure_dir(out_dir);
    const auto member_paths = config.get_string_list("stack.members");
    if (member_paths.size() != kEnsembleMembers) {
        throw ConfigError("stack.members must list exactly 3 checkpoints, got " +
                          std::to_string(member_paths.size()));
    }
    const StackMode mode = stack_mode_from_string(config.get("stack.mode"));
    const std::string manifest_path = config.get("data.manifest");
    if (manifest_path.empty()) throw ConfigError("key 'data.manifest' is required");
    const Manifest manifest = load_manifest(manifest_path, Task::svdh);
    const auto fit_records = records_for_split(manifest, config.get("stack.fit_split"));
    const auto test_records = records_for_split(manifest, "test");
    const int batch_size = config.get_int("train.batch_size");
    const SeverityBinning binning = config.binning();

    std::vector<Checkpoint> ckpts;
    std::vector<Model> models;
    for (const std::string& path : member_paths) {
        ckpts.push_back(load_checkpoint(path));
        models.push_back(model_from_checkpoint(ckpts.back()));
        const bool member_is_regression = models.back().spec().head == HeadKind::regression;
        if (member_is_regression != (mode == StackMode::regression)) {
            throw ConfigError("member " + path + " head does not match stacking mode " +
                              to_string(mode));
        }
    }

    auto member_matrix = [&](const std::vector<const ImageRecord*>& records) {
        const int n = static_cast<int>(records.size());
        if (mode == StackMode::regression) {
            Tensor x({n, kEnsembleMembers});
            for (int m = 0; m < kEnsembleMembers; ++m) {
                const auto scores =
                    predict_scores(models[static_cast<std::size_t>(m)], records,
                                   ckpts[static_cast<std::size_t>(m)].pixel_stats,
                                   ckpts[static_cast<std::size_t>(m)].target_stats,
                                   ckpts[static_cast<std::size_t>(m)].input_size, batch_size);
                for (int i = 0; i < n; ++i) {
                    x.at2(i, m) = standardize_target(scores[static_cast<std::size_t>(i)],
                                                     manifest.target_stats);
                }
            }
            return x;
        }
        Tensor x({n, kEnsembleMembers * kSeverityClassCount});
        for (int m = 0; m < kEnsembleMembers; ++m) {
            const Tensor logits = predict_logits(models[static_cast<std::size_t>(m)], records,
                                                 ckpts[static_cast<std::size_t>(m)].pixel_stats,
                                                 ckpts[static_cast<std::size_t>(m)].input_size,
                                                 batch_size);
            for (int i = 0; i < n; ++i) {
                for (int k = 0; k < kSeverityClassCount; ++k) {
                    x.at2(i, m * kSeverityClassCount + k) = logits.at2(i, k);
                }
            }
        }
        return x;
    };

    const Tensor fit_x = member_matrix(fit_records);
    std::vector<double> fit_targets;
    for (const ImageRecord* r : fit_records) {
        fit_targets.push_back(mode == StackMode::regression
                                  ? standardize_target(r->target, manifest.target_stats)
                                  : static_cast<double>(binning.score_to_class(
                                        std::clamp(r->target, 0.0, kMaxTotalScore))));
    }

    EnsembleSpec spec = fit_stacker(fit_x, fit_targets, mode, config.stack_fit_config());
    spec.target_stats = manifest.target_stats;
    std::copy(member_paths.begin(), member_paths.end(), spec.member_paths.begin());
    const std::string spec_path = (fs::path(out_dir) / "ensemble.json").string();
    write_text(spec_path, spec.to_json());

    std::vector<std::string> outputs{spec_path};
    const Tensor test_x = member_matrix(test_records);
    std::vector<double> truth;
    for (const ImageRecord* r : test_records) truth.push_back(r->target);

    if (mode == StackMode::regression) {
        const std::vector<double> scores = predict_stacked_scores(spec, test_x);
        const MetricsReport report = regression_metrics(scores, truth);
        const std::string metrics_path = (fs::path(out_dir) / "metrics.json").string();
        write_text(metrics_path, report.to_json());
        outputs.push_back(metrics_path);
        const std::string scatter_path = (fs::path(out_dir) / "scatter.png").string();
        render_scatter_figure(scores, truth, scatter_path);
        outputs.push_back(scatter_path);
    } else {
        const std::vector<int> pred_classes = predict_stacked_classes(spec, test_x);
        std::vector<int> true_classes;
        for (double t : truth) {
            true_classes.push_back(binning.score_to_class(std::clamp(t, 0.0, kMaxTotalScore)));
        }
        const MetricsReport report = classification_metrics(pred_classes, true_classes);
        const std::string metrics_path = (fs::path(out_dir) / "metrics.json").string();
        write_text(metrics_path, report.to_json());
        outputs.push_back(metrics_path);
        const std::string confusion_path = (fs::path(out_dir) / "confusion.png").string();
        render_confusion_figure(*report.confusion, binning, confusion_path);
        outputs.push_back(confusion_path);
    }

    std::vector<std::string> inputs{manifest_path};
    inputs.insert(inputs.end(), member_paths.begin(), member_paths.end());
    write_run_json(out_dir, "stack", config.get_seed(), config.entries(), inputs, outputs);
}

void cmd_explain(const RunConfig& config) {
    const std::string out_dir = config.get("output.dir");
    ensure_dir(out_dir);
    const std::string ckpt_path = config.get("explain.checkpoint");
    if (ckpt_path.empty()) throw ConfigError("key 'explain.checkpoint' is required");
    const std::string manifest_path = config.get("data.manifest");
    if (manifest_path.empty()) throw ConfigError("key 'data.manifest' is required");

    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    Model model = model_from_checkpoint(ckpt);
    const Manifest manifest = load_manifest(manifest_path, Task::svdh);
    const auto records = records_for_split(manifest, config.get("explain.split"));
    const int batch_size = config.get_int("train.batch_size");
    const SeverityBinning binning = config.binning();
    const double alpha = config.get_double("explain.alpha");
    const int max_per_category = config.get_int("explain.max_per_category");
    const bool regression = model.spec().head == HeadKind::regression;

    std::vector<std::string> ids;
    std::vector<double> truth;
    for (const ImageRecord* r : records) {
        ids.push_back(r->id);
        truth.push_back(r->target);
    }

    // Classification exemplars reuse the regression thresholds on bin
    // midpoints (a heuristic; the selection rules are only defined for
    // regression).
    std::vector<double> predicted;
    std::vector<int> predicted_classes;
    if (regression) {
        predicted = predict_scores(model, records, ckpt.pixel_stats, ckpt.target_stats,
                                   ckpt.input_size, batch_size);
    } else {
        const Tensor logits =
            predict_logits(model, records, ckpt.pixel_stats, ckpt.input_size, batch_size);
        for (int i = 0; i < logits.dim(0); ++i) {
            int argmax = 0;
            for (int k = 1; k < kSeverityClassCount; ++k) {
                if (logits.at2(i, k) > logits.at2(i, argmax)) argmax = k;
            }
            predicted_classes.push_back(argmax);
            predicted.push_back(binning.midpoint(argmax));
        }
    }

    const CamCaseSelection selection = select_cam_cases(ids, predicted, truth);

    std::map<std::string, const ImageRecord*> by_id;
    std::map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_id[records[i]->id] = records[i];
        index_of[records[i]->id] = i;
    }

    json report = json::array();
    std::vector<std::string> outputs;
    auto render_category = [&](const std::string& kind, const std::vector<std::string>& case_ids) {
        int rendered = 0;
        for (const std::string& id : case_ids) {
            if (rendered >= max_per_category) break;
            const ImageRecord* record = by_id.at(id);
            const GrayImage raw = load_gray_image(record->image_path);
            const GrayImage pre = prepare_eval(raw, ckpt.input_size, ckpt.pixel_stats);
            const CamTarget target =
                regression ? CamTarget::regression_output()
                           : CamTarget::class_logit(predicted_classes[index_of.at(id)]);
            const Heatmap heatmap = grad_cam_single(model, pre, target);
            const GrayImage base = resize_bilinear(raw, ckpt.input_size, ckpt.input_size);
            const std::string overlay_path =
                (fs::path(out_dir) / ("overlay_" + kind + "_" + id + ".png")).string();
            render_overlay(base, heatmap, overlay_path, alpha);
            outputs.push_back(overlay_path);
            report.push_back({{"kind", kind},
                              {"id", id},
                              {"true", truth[index_of.at(id)]},
                              {"predicted", predicted[index_of.at(id)]},
                              {"overlay", overlay_path}});
            ++rendered;
        }
    };
    render_category("TP", selection.true_positive);
    render_category("TN", selection.true_negative);
    render_category("FP", selection.false_positive);
    render_category("FN", selection.false_negative);

    const std::string report_path = (fs::path(out_dir) / "report.json").string();
    write_text(report_path, report.dump(2));
    outputs.push_back(report_path);
    write_run_json(out_dir, "explain", config.get_seed(), config.entries(),
                   {ckpt_path, manifest_path}, outputs);
}

}  // namespace rascore
