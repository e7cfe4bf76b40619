#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rascore/common.hpp"
#include "rascore/tensor.hpp"

namespace rascore {

/// One learnable tensor. `trainable` is flipped by a freeze plan; the
/// optimizer skips non-trainable parameters so their values stay bit-identical
/// through any number of steps.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;
};

/// Non-learnable state saved with checkpoints (batch-norm running statistics).
struct BufferVar {
    std::string name;
    Tensor value;
};

class BatchNorm2d;

/// Caffe-style layer: forward caches whatever backward needs, backward returns
/// the gradient with respect to the layer input and accumulates parameter
/// gradients.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) {
        (void)params;
        (void)buffers;
    }
    virtual void collect_batchnorms(std::vector<BatchNorm2d*>& bns) { (void)bns; }
};

/// 2-D convolution, NCHW, square kernel, no bias (always followed by a norm
/// layer in the backbones used here). Supports grouped and depthwise filters.
class Conv2d : public Layer {
public:
    Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding,
           int groups, Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) override;

    Parameter& weight() { return weight_; }

private:
    int in_ch_, out_ch_, kernel_, stride_, pad_, groups_;
    Parameter weight_;  // (out, in/groups, k, k)
    Tensor input_;
};

/// Per-channel batch normalization. In training mode it normalizes with batch
/// statistics and updates the running estimates; in eval mode (or when frozen
/// by a freeze plan) it normalizes with the running estimates and leaves them
/// untouched.
class BatchNorm2d : public Layer {
public:
    BatchNorm2d(std::string name, int channels);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) override;
    void collect_batchnorms(std::vector<BatchNorm2d*>& bns) override { bns.push_back(this); }

    void set_frozen(bool frozen) { frozen_ = frozen; }
    bool frozen() const { return frozen_; }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    int channels_;
    double momentum_ = 0.1;
    double eps_ = 1e-5;
    Parameter gamma_, beta_;
    BufferVar running_mean_, running_var_;
    bool frozen_ = false;

    // backward cache
    bool used_batch_stats_ = false;
    Tensor xhat_;
    std::vector<double> invstd_;
    std::int64_t per_channel_count_ = 0;
};

/// ReLU or ReLU6.
class Activation : public Layer {
public:
    enum class Kind { relu, relu6 };
    explicit Activation(Kind kind) : kind_(kind) {}

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    Kind kind_;
    Tensor input_;
};

/// Max pooling with square window; ties resolve to the first maximum in scan
/// order so backward routes each output gradient to exactly one input.
class MaxPool2d : public Layer {
public:
    MaxPool2d(int kernel, int stride, int padding)
        : kernel_(kernel), stride_(stride), pad_(padding) {}

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    int kernel_, stride_, pad_;
    std::vector<int> input_shape_;
    std::vector<std::int64_t> argmax_;
};

/// (N,C,H,W) -> (N,C) spatial mean.
class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

    /// Gradient of the pooled output spread back over a feature map of the
    /// given spatial size, without any cached state.
    static Tensor spread(const Tensor& dpooled, int height, int width);

private:
    int height_ = 0, width_ = 0;
};

/// Fully connected y = x W^T + b.
class Linear : public Layer {
public:
    Linear(std::string name, int in_features, int out_features, Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) override;

    /// Gradient with respect to the input only; parameter gradients untouched.
    Tensor input_grad(const Tensor& dy) const;

    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }
    int in_features() const { return in_; }
    int out_features() const { return out_; }
    void reinitialize(Rng& rng);

private:
    int in_, out_;
    Parameter weight_;  // (out, in)
    Parameter bias_;    // (out)
    Tensor input_;
};

/// Runs children in order.
class Sequential : public Layer {
public:
    void add(std::unique_ptr<Layer> layer) { children_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) override;
    void collect_batchnorms(std::vector<BatchNorm2d*>& bns) override;

    bool empty() const { return children_.empty(); }

private:
    std::vector<std::unique_ptr<Layer>> children_;
};

}  // namespace rascore
