#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rascore/model.hpp"

namespace rascore {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'S', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;

json tensor_list_meta(const std::vector<std::pair<std::string, Tensor>>& tensors) {
    json arr = json::array();
    for (const auto& [name, tensor] : tensors) {
        arr.push_back({{"name", name}, {"shape", tensor.shape()}});
    }
    return arr;
}

void write_tensor_data(std::ofstream& out, const Tensor& tensor) {
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(double)));
}

Tensor read_tensor_data(std::ifstream& in, const std::vector<int>& shape) {
    Tensor tensor(shape);
    in.read(reinterpret_cast<char*>(tensor.data()),
            static_cast<std::streamsize>(tensor.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint truncated while reading tensor data");
    return tensor;
}

std::string join_names(const std::vector<std::string>& names) {
    std::string joined;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) joined += ", ";
        joined += names[i];
        if (i >= 7 && names.size() > 9) {
            joined += ", ... (" + std::to_string(names.size()) + " total)";
            break;
        }
    }
    return joined;
}

/// Copies `src` tensors into the matching model-side tensors by name.
/// `model_side` maps name -> destination tensor pointer.
void copy_by_name(const std::vector<std::pair<std::string, Tensor>>& src,
                  const std::map<std::string, Tensor*>& model_side, const std::string& what) {
    std::vector<std::string> missing, unexpected, mismatched;
    std::set<std::string> seen;
    for (const auto& [name, tensor] : src) {
        auto it = model_side.find(name);
        if (it == model_side.end()) {
            unexpected.push_back(name);
            continue;
        }
        seen.insert(name);
        if (it->second->shape() != tensor.shape()) {
            mismatched.push_back(name);
            continue;
        }
        *it->second = tensor;
    }
    for (const auto& [name, dst] : model_side) {
        (void)dst;
        if (!seen.count(name)) missing.push_back(name);
    }
    if (!missing.empty() || !unexpected.empty() || !mismatched.empty()) {
        std::ostringstream msg;
        msg << "checkpoint incompatible with model (" << what << ")";
        if (!missing.empty()) msg << "; missing: " << join_names(missing);
        if (!unexpected.empty()) msg << "; unexpected: " << join_names(unexpected);
        if (!mismatched.empty()) msg << "; shape mismatch: " << join_names(mismatched);
        throw CheckpointError(msg.str());
    }
}

bool is_head_name(const std::string& name) { return name.rfind("fc.", 0) == 0; }

}  // namespace

Checkpoint snapshot(Model& model, const std::string& task, const Stats& target_stats,
                    const Stats& pixel_stats, int input_size) {
    Checkpoint ckpt;
    ckpt.spec = model.spec();
    ckpt.spec.freeze = FreezeScheme::none;
    ckpt.task = task;
    ckpt.input_size = input_size;
    ckpt.target_stats = target_stats;
    ckpt.pixel_stats = pixel_stats;
    for (const Parameter* p : model.parameters()) ckpt.params.emplace_back(p->name, p->value);
    for (const BufferVar* b : model.buffers()) ckpt.buffers.emplace_back(b->name, b->value);
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json meta{{"backbone", to_string(ckpt.spec.backbone)},
              {"desk_scale", ckpt.spec.desk_scale},
              {"head", to_string(ckpt.spec.head)},
              {"task", ckpt.task},
              {"input_size", ckpt.input_size},
              {"target_stats", {{"mean", ckpt.target_stats.mean}, {"sd", ckpt.target_stats.sd}}},
              {"pixel_stats", {{"mean", ckpt.pixel_stats.mean}, {"sd", ckpt.pixel_stats.sd}}},
              {"params", tensor_list_meta(ckpt.params)},
              {"buffers", tensor_list_meta(ckpt.buffers)}};
    const std::string meta_str = meta.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t meta_len = meta_str.size();
    out.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const auto& [name, tensor] : ckpt.params) write_tensor_data(out, tensor);
    for (const auto& [name, tensor] : ckpt.buffers) write_tensor_data(out, tensor);
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not a checkpoint file: " + path);
    }
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion) throw IoError("unsupported checkpoint version in " + path);
    std::uint64_t meta_len = 0;
    in.read(reinterpret_cast<char*>(&meta_len), sizeof(meta_len));
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw IoError("checkpoint truncated: " + path);

    json meta = json::parse(meta_str);
    Checkpoint ckpt;
    ckpt.spec.backbone = backbone_from_string(meta.at("backbone").get<std::string>());
    ckpt.spec.desk_scale = meta.at("desk_scale").get<bool>();
    ckpt.spec.head = head_from_string(meta.at("head").get<std::string>());
    ckpt.task = meta.at("task").get<std::string>();
    ckpt.input_size = meta.at("input_size").get<int>();
    ckpt.target_stats = {meta.at("target_stats").at("mean").get<double>(),
                         meta.at("target_stats").at("sd").get<double>()};
    ckpt.pixel_stats = {meta.at("pixel_stats").at("mean").get<double>(),
                        meta.at("pixel_stats").at("sd").get<double>()};
    for (const auto& entry : meta.at("params")) {
        ckpt.params.emplace_back(entry.at("name").get<std::string>(),
                                 read_tensor_data(in, entry.at("shape").get<std::vector<int>>()));
    }
    for (const auto& entry : meta.at("buffers")) {
        ckpt.buffers.emplace_back(entry.at("name").get<std::string>(),
                                  read_tensor_data(in, entry.at("shape").get<std::vector<int>>()));
    }
    return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
    Model model(ckpt.spec, /*seed=*/0);
    std::map<std::string, Tensor*> params, buffers;
    for (Parameter* p : model.parameters()) params[p->name] = &p->value;
    for (BufferVar* b : model.buffers()) buffers[b->name] = &b->value;
    copy_by_name(ckpt.params, params, "parameters");
    copy_by_name(ckpt.buffers, buffers, "buffers");
    return model;
}

Model transfer_weights(const Checkpoint& source, const ModelSpec& spec, std::uint64_t seed) {
    if (source.spec.backbone != spec.backbone || source.spec.desk_scale != spec.desk_scale) {
        throw CheckpointError("checkpoint backbone " + to_string(source.spec.backbone) +
                              (source.spec.desk_scale ? " (desk-scale)" : "") +
                              " does not match requested " + to_string(spec.backbone) +
                              (spec.desk_scale ? " (desk-scale)" : ""));
    }
    Model model(spec, seed);

    std::map<std::string, Tensor*> backbone_params, backbone_buffers;
    for (Parameter* p : model.parameters()) {
        if (!is_head_name(p->name)) backbone_params[p->name] = &p->value;
    }
    for (BufferVar* b : model.buffers()) backbone_buffers[b->name] = &b->value;

    std::vector<std::pair<std::string, Tensor>> src_backbone, src_head;
    for (const auto& entry : source.params) {
        (is_head_name(entry.first) ? src_head : src_backbone).push_back(entry);
    }
    copy_by_name(src_backbone, backbone_params, "backbone parameters");
    copy_by_name(source.buffers, backbone_buffers, "running statistics");

    // Same head width: the head transfers as well. Different width: the fresh
    // initialization from the model build stands.
    if (head_width(source.spec.head) == head_width(spec.head)) {
        std::map<std::string, Tensor*> head_params;
        for (Parameter* p : model.parameters()) {
            if (is_head_name(p->name)) head_params[p->name] = &p->value;
        }
        copy_by_name(src_head, head_params, "head parameters");
    }
    return model;
}

}  // namespace rascore
