#include "rascore/model.hpp"

#include <algorithm>

#include "backbone_builder.hpp"

namespace rascore {

std::string to_string(BackboneKind kind) {
    switch (kind) {
        case BackboneKind::resnet34: return "resnet34";
        case BackboneKind::resnet50: return "resnet50";
        case BackboneKind::mobilenetv2: return "mobilenetv2";
    }
    return "?";
}

std::string to_string(HeadKind kind) {
    return kind == HeadKind::regression ? "regression" : "classification";
}

std::string to_string(FreezeScheme scheme) {
    switch (scheme) {
        case FreezeScheme::none: return "none";
        case FreezeScheme::rbs1: return "RBs-1";
        case FreezeScheme::rbs2: return "RBs-2";
        case FreezeScheme::irbs2: return "IRBs-2";
        case FreezeScheme::irbs3: return "IRBs-3";
    }
    return "?";
}

BackboneKind backbone_from_string(const std::string& s) {
    if (s == "resnet34") return BackboneKind::resnet34;
    if (s == "resnet50") return BackboneKind::resnet50;
    if (s == "mobilenetv2") return BackboneKind::mobilenetv2;
    throw ConfigError("unknown backbone '" + s + "' (expected resnet34|resnet50|mobilenetv2)");
}

HeadKind head_from_string(const std::string& s) {
    if (s == "regression") return HeadKind::regression;
    if (s == "classification") return HeadKind::classification;
    throw ConfigError("unknown head '" + s + "' (expected regression|classification)");
}

FreezeScheme freeze_from_string(const std::string& s) {
    if (s == "none") return FreezeScheme::none;
    if (s == "RBs-1") return FreezeScheme::rbs1;
    if (s == "RBs-2") return FreezeScheme::rbs2;
    if (s == "IRBs-2") return FreezeScheme::irbs2;
    if (s == "IRBs-3") return FreezeScheme::irbs3;
    throw ConfigError("unknown freeze scheme '" + s + "' (expected none|RBs-1|RBs-2|IRBs-2|IRBs-3)");
}

void validate_spec(const ModelSpec& spec) {
    const bool resnet =
        spec.backbone == BackboneKind::resnet34 || spec.backbone == BackboneKind::resnet50;
    const bool rbs = spec.freeze == FreezeScheme::rbs1 || spec.freeze == FreezeScheme::rbs2;
    const bool irbs = spec.freeze == FreezeScheme::irbs2 || spec.freeze == FreezeScheme::irbs3;
    if (rbs && !resnet) {
        throw ConfigError("freeze scheme " + to_string(spec.freeze) + " requires a ResNet backbone");
    }
    if (irbs && resnet) {
        throw ConfigError("freeze scheme " + to_string(spec.freeze) + " requires mobilenetv2");
    }
}

std::vector<std::string> freeze_prefixes(const ModelSpec& spec) {
    switch (spec.freeze) {
        case FreezeScheme::none: return {};
        case FreezeScheme::rbs1: return {"stem.", "stage1."};
        case FreezeScheme::rbs2: return {"stem.", "stage1.", "stage2."};
        case FreezeScheme::irbs2: return {"stem.", "stack1.", "stack2."};
        case FreezeScheme::irbs3: return {"stem.", "stack1.", "stack2.", "stack3."};
    }
    return {};
}

namespace {

bool has_prefix(const std::string& name, const std::vector<std::string>& prefixes) {
    return std::any_of(prefixes.begin(), prefixes.end(), [&name](const std::string& p) {
        return name.rfind(p, 0) == 0;
    });
}

}  // namespace

Model::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
    validate_spec(spec);
    Rng rng = derived_rng(seed, /*stream=*/0x6d6f64656c);  // "model"
    auto build = detail::build_backbone(spec, rng);
    backbone_ = std::move(build.features);
    feature_channels_ = build.feature_channels;
    pool_ = std::make_unique<GlobalAvgPool>();
    head_ = std::make_unique<Linear>("fc", feature_channels_, head_width(spec.head), rng);

    backbone_->collect(params_, buffers_);
    head_->collect(params_, buffers_);
    backbone_->collect_batchnorms(batchnorms_);
    apply_freeze();
}

void Model::apply_freeze() {
    const auto prefixes = freeze_prefixes(spec_);
    for (Parameter* p : params_) p->trainable = !has_prefix(p->name, prefixes);
    for (BatchNorm2d* bn : batchnorms_) bn->set_frozen(has_prefix(bn->name(), prefixes));
}

Tensor Model::forward(const Tensor& batch, bool train) {
    features_ = backbone_->forward(batch, train);
    Tensor pooled = pool_->forward(features_, train);
    return head_->forward(pooled, train);
}

Tensor Model::backward(const Tensor& dout) {
    Tensor dpooled = head_->backward(dout);
    Tensor dfeatures = pool_->backward(dpooled);
    return backbone_->backward(dfeatures);
}

Tensor Model::feature_grad(const Tensor& dout) const {
    if (features_.empty()) throw ValidationError("feature_grad requires a preceding forward pass");
    Tensor dpooled = head_->input_grad(dout);
    return GlobalAvgPool::spread(dpooled, features_.dim(2), features_.dim(3));
}

void Model::zero_grad() {
    for (Parameter* p : params_) p->grad.fill(0.0);
}

FreezePlan Model::freeze_plan() const {
    FreezePlan plan;
    for (const Parameter* p : params_) {
        if (p->trainable) {
            plan.trainable_parameter_names.push_back(p->name);
        } else {
            plan.frozen_parameter_names.push_back(p->name);
        }
    }
    return plan;
}

void Model::reinitialize_head(std::uint64_t seed) {
    Rng rng = derived_rng(seed, /*stream=*/0x68656164);  // "head"
    head_->reinitialize(rng);
}

}  // namespace rascore
