#include "rascore/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rascore {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::registry() {
    static const std::vector<ConfigKey> keys = {
        {"task", "svdh_regression", "bone_age | svdh_regression | svdh_classification"},
        {"seed", "0", "root seed; all randomness derives from it"},
        {"desk_scale", "false", "use the width/depth-reduced backbone variants"},
        {"output.dir", "out", "directory all artifacts are written to"},
        {"data.manifest", "", "CSV manifest (id,image_path,target,split)"},
        {"model.backbone", "resnet34", "resnet34 | resnet50 | mobilenetv2"},
        {"model.freeze", "none", "none | RBs-1 | RBs-2 | IRBs-2 | IRBs-3"},
        {"model.init_checkpoint", "", "pretraining checkpoint to transfer from; empty = scratch"},
        {"train.epochs", "auto", "auto resolves to 100 for SvdH tasks, 50 for bone age"},
        {"train.batch_size", "4", "mini-batch size (the paper uses 4 or 16)"},
        {"train.learning_rate", "0.001", "SGD learning rate, no schedule"},
        {"train.weight_decay", "0.001", "coupled L2 weight decay"},
        {"train.momentum", "0.9", "SGD momentum"},
        {"train.loss", "auto", "mse | smooth | cross_entropy; auto picks by task"},
        {"augment.horizontal_flip_prob", "0.5", "probability of a horizontal flip"},
        {"augment.intensity_low", "0.9", "lower bound of the intensity scale draw"},
        {"augment.intensity_high", "1.1", "upper bound of the intensity scale draw"},
        {"augment.target_size", "1024", "square resize target in pixels"},
        {"binning.edges", "0,5,10,15,20,30,45,70,110,180,280",
         "11 severity bin edges over [0,280]"},
        {"evaluate.checkpoint", "", "checkpoint to evaluate"},
        {"evaluate.predictions_csv", "",
         "score CSV (optional id column + two numeric columns) to evaluate directly"},
        {"evaluate.split", "test", "manifest split used for evaluation"},
        {"stack.members", "", "comma-separated paths of the 3 member checkpoints"},
        {"stack.mode", "regression", "regression | all_classes | single_class"},
        {"stack.fit_split", "validation", "split whose member predictions fit the stacker"},
        {"stack.epochs", "1500", "stacker gradient-descent epochs"},
        {"stack.batch_size", "16", "stacker mini-batch size (the paper uses 4 or 16)"},
        {"stack.learning_rate", "0.001", "stacker SGD learning rate"},
        {"stack.momentum", "0.9", "stacker SGD momentum"},
        {"stack.weight_decay", "0", "stacker weight decay (0 keeps the fit least-squares)"},
        {"explain.checkpoint", "", "checkpoint to explain"},
        {"explain.split", "test", "manifest split the exemplars are selected from"},
        {"explain.alpha", "0.5", "overlay blend strength"},
        {"explain.max_per_category", "4", "overlays rendered per TP/TN/FP/FN category"},
    };
    return keys;
}

RunConfig RunConfig::defaults() {
    RunConfig config;
    for (const ConfigKey& k : registry()) config.values_[k.key] = k.default_value;
    return config;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    RunConfig config = defaults();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& keys = registry();
    const bool known = std::any_of(keys.begin(), keys.end(),
                                   [&key](const ConfigKey& k) { return k.key == key; });
    if (!known) throw ConfigError("unknown configuration key '" + key + "'");
    values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    return it->second;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + v + "'");
}

int RunConfig::get_int(const std::string& key) const {
    try {
        std::size_t consumed = 0;
        const int v = std::stoi(get(key), &consumed);
        if (consumed != get(key).size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + get(key) + "'");
    }
}

double RunConfig::get_double(const std::string& key) const {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(get(key), &consumed);
        if (consumed != get(key).size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + get(key) + "'");
    }
}

std::uint64_t RunConfig::get_seed() const {
    try {
        return std::stoull(get("seed"));
    } catch (const std::exception&) {
        throw ConfigError("key 'seed' expects a non-negative integer, got '" + get("seed") + "'");
    }
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    std::istringstream stream(get(key));
    std::string token;
    while (std::getline(stream, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "' expects numbers, got '" + token + "'");
        }
    }
    return out;
}

std::vector<std::string> RunConfig::get_string_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream stream(get(key));
    std::string token;
    while (std::getline(stream, token, ',')) {
        token = trim(token);
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

TrainTask RunConfig::task() const { return train_task_from_string(get("task")); }

ModelSpec RunConfig::model_spec() const {
    ModelSpec spec;
    spec.backbone = backbone_from_string(get("model.backbone"));
    spec.head = task() == TrainTask::svdh_classification ? HeadKind::classification
                                                         : HeadKind::regression;
    spec.freeze = freeze_from_string(get("model.freeze"));
    spec.desk_scale = get_bool("desk_scale");
    validate_spec(spec);
    return spec;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig config;
    config.task = task();
    const std::string epochs = get("train.epochs");
    config.epochs = epochs == "auto" ? (config.task == TrainTask::bone_age ? 50 : 100)
                                     : get_int("train.epochs");
    config.batch_size = get_int("train.batch_size");
    config.learning_rate = get_double("train.learning_rate");
    config.weight_decay = get_double("train.weight_decay");
    config.momentum = get_double("train.momentum");
    const std::string loss = get("train.loss");
    config.loss = loss == "auto" ? (config.task == TrainTask::svdh_classification
                                        ? LossKind::cross_entropy
                                        : LossKind::mse)
                                 : loss_from_string(loss);
    config.seed = get_seed();
    config.augment = augment_policy();
    config.binning = binning();
    validate_train_config(config);
    return config;
}

AugmentPolicy RunConfig::augment_policy() const {
    AugmentPolicy policy;
    policy.horizontal_flip_prob = get_double("augment.horizontal_flip_prob");
    policy.intensity_low = get_double("augment.intensity_low");
    policy.intensity_high = get_double("augment.intensity_high");
    policy.target_size = get_int("augment.target_size");
    validate_policy(policy);
    return policy;
}

SeverityBinning RunConfig::binning() const {
    return SeverityBinning::from_edges(get_double_list("binning.edges"));
}

StackFitConfig RunConfig::stack_fit_config() const {
    StackFitConfig config;
    config.learning_rate = get_double("stack.learning_rate");
    config.momentum = get_double("stack.momentum");
    config.weight_decay = get_double("stack.weight_decay");
    config.batch_size = get_int("stack.batch_size");
    config.epochs = get_int("stack.epochs");
    config.seed = get_seed();
    return config;
}

}  // namespace rascore
