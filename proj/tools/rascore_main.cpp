#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rascore/commands.hpp"
#include "rascore/common.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string seed;
    std::string out_dir;
    bool desk_scale = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "run configuration file (flat key = value)");
    cmd->add_option("--seed", opts.seed, "override the root seed");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
    cmd->add_flag("--desk-scale", opts.desk_scale, "use the reduced desk-scale backbones");
}

rascore::RunConfig resolve_config(const CommonOpts& opts) {
    rascore::RunConfig config = opts.config_path.empty()
                                    ? rascore::RunConfig::defaults()
                                    : rascore::RunConfig::from_file(opts.config_path);
    if (!opts.seed.empty()) config.set("seed", opts.seed);
    if (!opts.out_dir.empty()) config.set("output.dir", opts.out_dir);
    if (opts.desk_scale) config.set("desk_scale", "true");
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rascore: SvdH hand-radiograph scoring toolkit"};
    app.require_subcommand(1);

    rascore::SynthesizeArgs synth_args;
    CLI::App* synthesize =
        app.add_subcommand("synthesize", "Generate phantom radiographs with known SvdH totals");
    synthesize->add_option("--count", synth_args.count, "number of images")->required();
    synthesize->add_option("--size", synth_args.side_px, "square image side in pixels")
        ->default_val(64);
    synthesize->add_option("--seed", synth_args.seed, "generator seed")->default_val(0);
    synthesize->add_option("--out", synth_args.out_dir, "output directory")->required();
    synthesize->add_flag("--force", synth_args.force, "overwrite a non-empty output directory");

    CommonOpts pretrain_opts, train_opts, evaluate_opts, stack_opts, explain_opts;
    CLI::App* pretrain = app.add_subcommand("pretrain", "Bone-age pretraining run");
    add_common(pretrain, pretrain_opts);
    CLI::App* train = app.add_subcommand("train", "SvdH score or severity-class training run");
    add_common(train, train_opts);
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "Metrics for a checkpoint or a predictions CSV");
    add_common(evaluate, evaluate_opts);
    CLI::App* stack = app.add_subcommand("stack", "Fit and evaluate the 3-member linear stacker");
    add_common(stack, stack_opts);
    CLI::App* explain = app.add_subcommand("explain", "Grad-CAM overlays for TP/TN/FP/FN exemplars");
    add_common(explain, explain_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synthesize->parsed()) {
            rascore::cmd_synthesize(synth_args);
        } else if (pretrain->parsed()) {
            rascore::cmd_pretrain(resolve_config(pretrain_opts));
        } else if (train->parsed()) {
            rascore::cmd_train(resolve_config(train_opts));
        } else if (evaluate->parsed()) {
            rascore::cmd_evaluate(resolve_config(evaluate_opts));
        } else if (stack->parsed()) {
            rascore::cmd_stack(resolve_config(stack_opts));
        } else if (explain->parsed()) {
            rascore::cmd_explain(resolve_config(explain_opts));
        }
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
