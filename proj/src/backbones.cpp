#include "backbone_builder.hpp"

#include <array>
#include <optional>
#include <sstream>

namespace rascore::detail {

namespace {

/// Two 3x3 convolutions with an identity (or 1x1 projection) skip.
class BasicBlock : public Layer {
public:
    BasicBlock(const std::string& name, int in_ch, int out_ch, int stride, Rng& rng)
        : conv1_(name + ".conv1", in_ch, out_ch, 3, stride, 1, 1, rng),
          bn1_(name + ".bn1", out_ch),
          conv2_(name + ".conv2", out_ch, out_ch, 3, 1, 1, 1, rng),
          bn2_(name + ".bn2", out_ch),
          relu1_(Activation::Kind::relu),
          relu_out_(Activation::Kind::relu) {
        if (stride != 1 || in_ch != out_ch) {
            down_conv_.emplace(name + ".down.conv", in_ch, out_ch, 1, stride, 0, 1, rng);
            down_bn_.emplace(name + ".down.bn", out_ch);
        }
    }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor out = relu1_.forward(bn1_.forward(conv1_.forward(x, train), train), train);
        out = bn2_.forward(conv2_.forward(out, train), train);
        Tensor skip = down_conv_ ? down_bn_->forward(down_conv_->forward(x, train), train) : x;
        for (std::int64_t i = 0; i < out.size(); ++i) out[i] += skip[i];
        return relu_out_.forward(out, train);
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dsum = relu_out_.backward(dy);
        Tensor dmain = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(dsum)))));
        Tensor dskip = down_conv_ ? down_conv_->backward(down_bn_->backward(dsum)) : dsum;
        for (std::int64_t i = 0; i < dmain.size(); ++i) dmain[i] += dskip[i];
        return dmain;
    }

    void collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) override {
        conv1_.collect(params, buffers);
        bn1_.collect(params, buffers);
        conv2_.collect(params, buffers);
        bn2_.collect(params, buffers);
        if (down_conv_) {
            down_conv_->collect(params, buffers);
            down_bn_->collect(params, buffers);
        }
    }

    void collect_batchnorms(std::vector<BatchNorm2d*>& bns) override {
        bns.push_back(&bn1_);
        bns.push_back(&bn2_);
        if (down_bn_) bns.push_back(&*down_bn_);
    }

private:
    Conv2d conv1_;
    BatchNorm2d bn1_;
    Conv2d conv2_;
    BatchNorm2d bn2_;
    Activation relu1_, relu_out_;
    std::optional<Conv2d> down_conv_;
    std::optional<BatchNorm2d> down_bn_;
};

/// 1x1 reduce, 3x3 (carries the stride), 1x1 expand by 4, plus skip.
class BottleneckBlock : public Layer {
public:
    static constexpr int kExpansion = 4;

    BottleneckBlock(const std::string& name, int in_ch, int width, int stride, Rng& rng)
        : conv1_(name + ".conv1", in_ch, width, 1, 1, 0, 1, rng),
          bn1_(name + ".bn1", width),
          conv2_(name + ".conv2", width, width, 3, stride, 1, 1, rng),
          bn2_(name + ".bn2", width),
          conv3_(name + ".conv3", width, width * kExpansion, 1, 1, 0, 1, rng),
          bn3_(name + ".bn3", width * kExpansion),
          relu1_(Activation::Kind::relu),
          relu2_(Activation::Kind::relu),
          relu_out_(Activation::Kind::relu) {
        const int out_ch = width * kExpansion;
        if (stride != 1 || in_ch != out_ch) {
            down_conv_.emplace(name + ".down.conv", in_ch, out_ch, 1, stride, 0, 1, rng);
            down_bn_.emplace(name + ".down.bn", out_ch);
        }
    }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor out = relu1_.forward(bn1_.forward(conv1_.forward(x, train), train), train);
        out = relu2_.forward(bn2_.forward(conv2_.forward(out, train), train), train);
        out = bn3_.forward(conv3_.forward(out, train), train);
        Tensor skip = down_conv_ ? down_bn_->forward(down_conv_->forward(x, train), train) : x;
        for (std::int64_t i = 0; i < out.size(); ++i) out[i] += skip[i];
        return relu_out_.forward(out, train);
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dsum = relu_out_.backward(dy);
        Tensor d = bn3_.backward(dsum);
        d = conv3_.backward(d);
        d = relu2_.backward(d);
        d = bn2_.backward(d);
        d = conv2_.backward(d);
        d = relu1_.backward(d);
        d = bn1_.backward(d);
        Tensor dmain = conv1_.backward(d);
        Tensor dskip = down_conv_ ? down_conv_->backward(down_bn_->backward(dsum)) : dsum;
        for (std::int64_t i = 0; i < dmain.size(); ++i) dmain[i] += dskip[i];
        return dmain;
    }

    void collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) override {
        conv1_.collect(params, buffers);
        bn1_.collect(params, buffers);
        conv2_.collect(params, buffers);
        bn2_.collect(params, buffers);
        conv3_.collect(params, buffers);
        bn3_.collect(params, buffers);
        if (down_conv_) {
            down_conv_->collect(params, buffers);
            down_bn_->collect(params, buffers);
        }
    }

    void collect_batchnorms(std::vector<BatchNorm2d*>& bns) override {
        bns.push_back(&bn1_);
        bns.push_back(&bn2_);
        bns.push_back(&bn3_);
        if (down_bn_) bns.push_back(&*down_bn_);
    }

private:
    Conv2d conv1_;
    BatchNorm2d bn1_;
    Conv2d conv2_;
    BatchNorm2d bn2_;
    Conv2d conv3_;
    BatchNorm2d bn3_;
    Activation relu1_, relu2_, relu_out_;
    std::optional<Conv2d> down_conv_;
    std::optional<BatchNorm2d> down_bn_;
};

/// MobileNetV2 inverted residual: 1x1 expand, 3x3 depthwise, 1x1 linear
/// projection; residual connection when the block keeps shape.
class InvertedResidual : public Layer {
public:
    InvertedResidual(const std::string& name, int in_ch, int out_ch, int stride, int expand,
                     Rng& rng)
        : use_skip_(stride == 1 && in_ch == out_ch),
          dw_conv_(name + ".dw.conv", in_ch * expand, in_ch * expand, 3, stride, 1, in_ch * expand,
                   rng),
          dw_bn_(name + ".dw.bn", in_ch * expand),
          project_conv_(name + ".project.conv", in_ch * expand, out_ch, 1, 1, 0, 1, rng),
          project_bn_(name + ".project.bn", out_ch),
          relu_expand_(Activation::Kind::relu6),
          relu_dw_(Activation::Kind::relu6) {
        if (expand != 1) {
            expand_conv_.emplace(name + ".expand.conv", in_ch, in_ch * expand, 1, 1, 0, 1, rng);
            expand_bn_.emplace(name + ".expand.bn", in_ch * expand);
        }
    }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor out = x;
        if (expand_conv_) {
            out = relu_expand_.forward(expand_bn_->forward(expand_conv_->forward(out, train), train),
                                       train);
        }
        out = relu_dw_.forward(dw_bn_.forward(dw_conv_.forward(out, train), train), train);
        out = project_bn_.forward(project_conv_.forward(out, train), train);
        if (use_skip_) {
            for (std::int64_t i = 0; i < out.size(); ++i) out[i] += x[i];
        }
        return out;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor d = project_conv_.backward(project_bn_.backward(dy));
        d = dw_conv_.backward(dw_bn_.backward(relu_dw_.backward(d)));
        if (expand_conv_) {
            d = expand_conv_->backward(expand_bn_->backward(relu_expand_.backward(d)));
        }
        if (use_skip_) {
            for (std::int64_t i = 0; i < d.size(); ++i) d[i] += dy[i];
        }
        return d;
    }

    void collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) override {
        if (expand_conv_) {
            expand_conv_->collect(params, buffers);
            expand_bn_->collect(params, buffers);
        }
        dw_conv_.collect(params, buffers);
        dw_bn_.collect(params, buffers);
        project_conv_.collect(params, buffers);
        project_bn_.collect(params, buffers);
    }

    void collect_batchnorms(std::vector<BatchNorm2d*>& bns) override {
        if (expand_bn_) bns.push_back(&*expand_bn_);
        bns.push_back(&dw_bn_);
        bns.push_back(&project_bn_);
    }

private:
    bool use_skip_;
    std::optional<Conv2d> expand_conv_;
    std::optional<BatchNorm2d> expand_bn_;
    Conv2d dw_conv_;
    BatchNorm2d dw_bn_;
    Conv2d project_conv_;
    BatchNorm2d project_bn_;
    Activation relu_expand_, relu_dw_;
};

struct ResNetConfig {
    int stem_channels;
    std::array<int, 4> blocks;
    std::array<int, 4> widths;
    bool bottleneck;
};

ResNetConfig resnet_config(BackboneKind kind, bool desk) {
    const bool bottleneck = kind == BackboneKind::resnet50;
    if (desk) return {8, {1, 1, 1, 1}, {8, 12, 16, 24}, bottleneck};
    return {64, {3, 4, 6, 3}, {64, 128, 256, 512}, bottleneck};
}

struct IrbStack {
    int expand;
    int channels;
    int repeats;
    int stride;
};

struct MobileNetConfig {
    int stem_channels;
    std::array<IrbStack, 7> stacks;
    int top_channels;
};

MobileNetConfig mobilenet_config(bool desk) {
    if (desk) {
        return {8,
                {{{1, 8, 1, 1},
                  {4, 10, 1, 2},
                  {4, 12, 1, 2},
                  {4, 16, 1, 2},
                  {4, 20, 1, 1},
                  {4, 24, 1, 2},
                  {4, 32, 1, 1}}},
                64};
    }
    return {32,
            {{{1, 16, 1, 1},
              {6, 24, 2, 2},
              {6, 32, 3, 2},
              {6, 64, 4, 2},
              {6, 96, 3, 1},
              {6, 160, 3, 2},
              {6, 320, 1, 1}}},
            1280};
}

BackboneBuild build_resnet(const ModelSpec& spec, Rng& rng) {
    const ResNetConfig cfg = resnet_config(spec.backbone, spec.desk_scale);
    auto features = std::make_unique<Sequential>();
    features->add(std::make_unique<Conv2d>("stem.conv", 1, cfg.stem_channels, 7, 2, 3, 1, rng));
    features->add(std::make_unique<BatchNorm2d>("stem.bn", cfg.stem_channels));
    features->add(std::make_unique<Activation>(Activation::Kind::relu));
    features->add(std::make_unique<MaxPool2d>(3, 2, 1));

    int in_ch = cfg.stem_channels;
    for (int stage = 0; stage < 4; ++stage) {
        for (int block = 0; block < cfg.blocks[stage]; ++block) {
            std::ostringstream name;
            name << "stage" << stage + 1 << ".block" << block;
            const int stride = (stage > 0 && block == 0) ? 2 : 1;
            if (cfg.bottleneck) {
                features->add(std::make_unique<BottleneckBlock>(name.str(), in_ch,
                                                                cfg.widths[stage], stride, rng));
                in_ch = cfg.widths[stage] * BottleneckBlock::kExpansion;
            } else {
                features->add(
                    std::make_unique<BasicBlock>(name.str(), in_ch, cfg.widths[stage], stride, rng));
                in_ch = cfg.widths[stage];
            }
        }
    }
    return {std::move(features), in_ch};
}

BackboneBuild build_mobilenet(const ModelSpec& spec, Rng& rng) {
    const MobileNetConfig cfg = mobilenet_config(spec.desk_scale);
    auto features = std::make_unique<Sequential>();
    features->add(std::make_unique<Conv2d>("stem.conv", 1, cfg.stem_channels, 3, 2, 1, 1, rng));
    features->add(std::make_unique<BatchNorm2d>("stem.bn", cfg.stem_channels));
    features->add(std::make_unique<Activation>(Activation::Kind::relu6));

    int in_ch = cfg.stem_channels;
    for (int stack = 0; stack < 7; ++stack) {
        const IrbStack& s = cfg.stacks[stack];
        for (int block = 0; block < s.repeats; ++block) {
            std::ostringstream name;
            name << "stack" << stack + 1 << ".block" << block;
            const int stride = block == 0 ? s.stride : 1;
            features->add(
                std::make_unique<InvertedResidual>(name.str(), in_ch, s.channels, stride, s.expand, rng));
            in_ch = s.channels;
        }
    }
    features->add(std::make_unique<Conv2d>("top.conv", in_ch, cfg.top_channels, 1, 1, 0, 1, rng));
    features->add(std::make_unique<BatchNorm2d>("top.bn", cfg.top_channels));
    features->add(std::make_unique<Activation>(Activation::Kind::relu6));
    return {std::move(features), cfg.top_channels};
}

}  // namespace

BackboneBuild build_backbone(const ModelSpec& spec, Rng& rng) {
    if (spec.backbone == BackboneKind::mobilenetv2) return build_mobilenet(spec, rng);
    return build_resnet(spec, rng);
}

}  // namespace rascore::detail
