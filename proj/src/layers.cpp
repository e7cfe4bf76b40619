#include "rascore/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace rascore {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

int conv_out_dim(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

// Unrolls one image plane group into a (C*k*k) x (Ho*Wo) patch matrix.
void im2col(const double* x, int channels, int height, int width, int kernel, int stride, int pad,
            int out_h, int out_w, double* cols) {
    const std::int64_t plane = static_cast<std::int64_t>(out_h) * out_w;
    std::int64_t row = 0;
    for (int c = 0; c < channels; ++c) {
        const double* xc = x + static_cast<std::int64_t>(c) * height * width;
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj, ++row) {
                double* out = cols + row * plane;
                std::int64_t idx = 0;
                for (int ho = 0; ho < out_h; ++ho) {
                    const int hi = ho * stride - pad + ki;
                    if (hi < 0 || hi >= height) {
                        for (int wo = 0; wo < out_w; ++wo, ++idx) out[idx] = 0.0;
                        continue;
                    }
                    const double* xrow = xc + static_cast<std::int64_t>(hi) * width;
                    for (int wo = 0; wo < out_w; ++wo, ++idx) {
                        const int wi = wo * stride - pad + kj;
                        out[idx] = (wi >= 0 && wi < width) ? xrow[wi] : 0.0;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add patch gradients back onto the input plane.
void col2im_add(const double* cols, int channels, int height, int width, int kernel, int stride,
                int pad, int out_h, int out_w, double* dx) {
    const std::int64_t plane = static_cast<std::int64_t>(out_h) * out_w;
    std::int64_t row = 0;
    for (int c = 0; c < channels; ++c) {
        double* xc = dx + static_cast<std::int64_t>(c) * height * width;
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj, ++row) {
                const double* in = cols + row * plane;
                std::int64_t idx = 0;
                for (int ho = 0; ho < out_h; ++ho) {
                    const int hi = ho * stride - pad + ki;
                    if (hi < 0 || hi >= height) {
                        idx += out_w;
                        continue;
                    }
                    double* xrow = xc + static_cast<std::int64_t>(hi) * width;
                    for (int wo = 0; wo < out_w; ++wo, ++idx) {
                        const int wi = wo * stride - pad + kj;
                        if (wi >= 0 && wi < width) xrow[wi] += in[idx];
                    }
                }
            }
        }
    }
}

}  // namespace

bool all_finite(const Tensor& t) {
    for (double v : t.vec()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride,
               int padding, int groups, Rng& rng)
    : in_ch_(in_channels),
      out_ch_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(padding),
      groups_(groups) {
    if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || stride <= 0 || padding < 0 ||
        groups <= 0 || in_channels % groups != 0 || out_channels % groups != 0) {
        throw ConfigError("invalid convolution configuration for " + name);
    }
    weight_.name = std::move(name) + ".weight";
    weight_.value = Tensor({out_channels, in_channels / groups, kernel, kernel});
    weight_.grad = Tensor(weight_.value.shape());

    // He normal, fan-out mode, as is standard for conv-BN-ReLU backbones.
    const double fan_out = static_cast<double>(out_channels) * kernel * kernel;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_out));
    for (double& v : weight_.value.vec()) v = dist(rng);
}

Tensor Conv2d::forward(const Tensor& x, bool /*train*/) {
    if (x.ndim() != 4 || x.dim(1) != in_ch_) {
        throw ValidationError("convolution input shape mismatch for " + weight_.name);
    }
    const int batch = x.dim(0), height = x.dim(2), width = x.dim(3);
    const int out_h = conv_out_dim(height, kernel_, stride_, pad_);
    const int out_w = conv_out_dim(width, kernel_, stride_, pad_);
    if (out_h <= 0 || out_w <= 0) {
        throw ValidationError("convolution input too small for " + weight_.name);
    }
    input_ = x;

    const int cg = in_ch_ / groups_, og = out_ch_ / groups_;
    const std::int64_t krows = static_cast<std::int64_t>(cg) * kernel_ * kernel_;
    const std::int64_t plane = static_cast<std::int64_t>(out_h) * out_w;

    Tensor y({batch, out_ch_, out_h, out_w});
    std::vector<double> cols(static_cast<std::size_t>(krows * plane));
    for (int n = 0; n < batch; ++n) {
        for (int g = 0; g < groups_; ++g) {
            const double* xg =
                x.data() + (static_cast<std::int64_t>(n) * in_ch_ + g * cg) * height * width;
            im2col(xg, cg, height, width, kernel_, stride_, pad_, out_h, out_w, cols.data());
            ConstMapMat wm(weight_.value.data() + static_cast<std::int64_t>(g) * og * krows, og,
                           krows);
            ConstMapMat cm(cols.data(), krows, plane);
            MapMat ym(y.data() + (static_cast<std::int64_t>(n) * out_ch_ + g * og) * plane, og,
                      plane);
            ym.noalias() = wm * cm;
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const int batch = input_.dim(0), height = input_.dim(2), width = input_.dim(3);
    const int out_h = dy.dim(2), out_w = dy.dim(3);
    const int cg = in_ch_ / groups_, og = out_ch_ / groups_;
    const std::int64_t krows = static_cast<std::int64_t>(cg) * kernel_ * kernel_;
    const std::int64_t plane = static_cast<std::int64_t>(out_h) * out_w;

    Tensor dx(input_.shape());
    std::vector<double> cols(static_cast<std::size_t>(krows * plane));
    std::vector<double> dcols(static_cast<std::size_t>(krows * plane));
    for (int n = 0; n < batch; ++n) {
        for (int g = 0; g < groups_; ++g) {
            const double* xg =
                input_.data() + (static_cast<std::int64_t>(n) * in_ch_ + g * cg) * height * width;
            im2col(xg, cg, height, width, kernel_, stride_, pad_, out_h, out_w, cols.data());

            ConstMapMat dym(dy.data() + (static_cast<std::int64_t>(n) * out_ch_ + g * og) * plane,
                            og, plane);
            ConstMapMat cm(cols.data(), krows, plane);
            MapMat dwm(weight_.grad.data() + static_cast<std::int64_t>(g) * og * krows, og, krows);
            dwm.noalias() += dym * cm.transpose();

            ConstMapMat wm(weight_.value.data() + static_cast<std::int64_t>(g) * og * krows, og,
                           krows);
            MapMat dcm(dcols.data(), krows, plane);
            dcm.noalias() = wm.transpose() * dym;
            col2im_add(dcols.data(), cg, height, width, kernel_, stride_, pad_, out_h, out_w,
                       dx.data() + (static_cast<std::int64_t>(n) * in_ch_ + g * cg) * height * width);
        }
    }
    return dx;
}

void Conv2d::collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& /*buffers*/) {
    params.push_back(&weight_);
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, int channels) : name_(std::move(name)), channels_(channels) {
    gamma_.name = name_ + ".gamma";
    gamma_.value = Tensor({channels});
    gamma_.value.fill(1.0);
    gamma_.grad = Tensor({channels});
    beta_.name = name_ + ".beta";
    beta_.value = Tensor({channels});
    beta_.grad = Tensor({channels});
    running_mean_.name = name_ + ".running_mean";
    running_mean_.value = Tensor({channels});
    running_var_.name = name_ + ".running_var";
    running_var_.value = Tensor({channels});
    running_var_.value.fill(1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
    if (x.ndim() != 4 || x.dim(1) != channels_) {
        throw ValidationError("batch norm input shape mismatch for " + name_);
    }
    const int batch = x.dim(0), height = x.dim(2), width = x.dim(3);
    const std::int64_t spatial = static_cast<std::int64_t>(height) * width;
    const std::int64_t m = batch * spatial;
    used_batch_stats_ = train && !frozen_;
    per_channel_count_ = m;
    xhat_ = Tensor(x.shape());
    invstd_.assign(channels_, 0.0);

    Tensor y(x.shape());
    for (int c = 0; c < channels_; ++c) {
        double mean, var;
        if (used_batch_stats_) {
            double sum = 0.0, sq = 0.0;
            for (int n = 0; n < batch; ++n) {
                const double* xc = x.data() + (static_cast<std::int64_t>(n) * channels_ + c) * spatial;
                for (std::int64_t i = 0; i < spatial; ++i) {
                    sum += xc[i];
                    sq += xc[i] * xc[i];
                }
            }
            mean = sum / static_cast<double>(m);
            var = sq / static_cast<double>(m) - mean * mean;
            if (var < 0.0) var = 0.0;  // numeric guard
            const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
            running_mean_.value[c] = (1.0 - momentum_) * running_mean_.value[c] + momentum_ * mean;
            running_var_.value[c] = (1.0 - momentum_) * running_var_.value[c] + momentum_ * unbiased;
        } else {
            mean = running_mean_.value[c];
            var = running_var_.value[c];
        }
        const double inv = 1.0 / std::sqrt(var + eps_);
        invstd_[c] = inv;
        const double g = gamma_.value[c], b = beta_.value[c];
        for (int n = 0; n < batch; ++n) {
            const std::int64_t base = (static_cast<std::int64_t>(n) * channels_ + c) * spatial;
            const double* xc = x.data() + base;
            double* xh = xhat_.data() + base;
            double* yc = y.data() + base;
            for (std::int64_t i = 0; i < spatial; ++i) {
                xh[i] = (xc[i] - mean) * inv;
                yc[i] = g * xh[i] + b;
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
    const int batch = dy.dim(0), height = dy.dim(2), width = dy.dim(3);
    const std::int64_t spatial = static_cast<std::int64_t>(height) * width;
    const double m = static_cast<double>(per_channel_count_);

    Tensor dx(dy.shape());
    for (int c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < batch; ++n) {
            const std::int64_t base = (static_cast<std::int64_t>(n) * channels_ + c) * spatial;
            const double* dyc = dy.data() + base;
            const double* xh = xhat_.data() + base;
            for (std::int64_t i = 0; i < spatial; ++i) {
                sum_dy += dyc[i];
                sum_dy_xhat += dyc[i] * xh[i];
            }
        }
        gamma_.grad[c] += sum_dy_xhat;
        beta_.grad[c] += sum_dy;

        const double g = gamma_.value[c], inv = invstd_[c];
        if (used_batch_stats_) {
            const double coef = g * inv / m;
            for (int n = 0; n < batch; ++n) {
                const std::int64_t base = (static_cast<std::int64_t>(n) * channels_ + c) * spatial;
                const double* dyc = dy.data() + base;
                const double* xh = xhat_.data() + base;
                double* dxc = dx.data() + base;
                for (std::int64_t i = 0; i < spatial; ++i) {
                    dxc[i] = coef * (m * dyc[i] - sum_dy - xh[i] * sum_dy_xhat);
                }
            }
        } else {
            const double coef = g * inv;
            for (int n = 0; n < batch; ++n) {
                const std::int64_t base = (static_cast<std::int64_t>(n) * channels_ + c) * spatial;
                const double* dyc = dy.data() + base;
                double* dxc = dx.data() + base;
                for (std::int64_t i = 0; i < spatial; ++i) dxc[i] = coef * dyc[i];
            }
        }
    }
    return dx;
}

void BatchNorm2d::collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) {
    params.push_back(&gamma_);
    params.push_back(&beta_);
    buffers.push_back(&running_mean_);
    buffers.push_back(&running_var_);
}

// ---------------------------------------------------------------------------
// Activation

Tensor Activation::forward(const Tensor& x, bool /*train*/) {
    input_ = x;
    Tensor y(x.shape());
    const double* in = x.data();
    double* out = y.data();
    if (kind_ == Kind::relu) {
        for (std::int64_t i = 0; i < x.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    } else {
        for (std::int64_t i = 0; i < x.size(); ++i) {
            out[i] = in[i] > 0.0 ? (in[i] < 6.0 ? in[i] : 6.0) : 0.0;
        }
    }
    return y;
}

Tensor Activation::backward(const Tensor& dy) {
    Tensor dx(dy.shape());
    const double* in = input_.data();
    const double* d = dy.data();
    double* out = dx.data();
    if (kind_ == Kind::relu) {
        for (std::int64_t i = 0; i < dy.size(); ++i) out[i] = in[i] > 0.0 ? d[i] : 0.0;
    } else {
        for (std::int64_t i = 0; i < dy.size(); ++i) {
            out[i] = (in[i] > 0.0 && in[i] < 6.0) ? d[i] : 0.0;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2d

Tensor MaxPool2d::forward(const Tensor& x, bool /*train*/) {
    const int batch = x.dim(0), channels = x.dim(1), height = x.dim(2), width = x.dim(3);
    const int out_h = conv_out_dim(height, kernel_, stride_, pad_);
    const int out_w = conv_out_dim(width, kernel_, stride_, pad_);
    if (out_h <= 0 || out_w <= 0) throw ValidationError("max pool input too small");
    input_shape_ = x.shape();
    Tensor y({batch, channels, out_h, out_w});
    argmax_.assign(static_cast<std::size_t>(y.size()), -1);

    std::int64_t oidx = 0;
    for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < channels; ++c) {
            const std::int64_t base = (static_cast<std::int64_t>(n) * channels + c) *
                                      static_cast<std::int64_t>(height) * width;
            const double* xc = x.data() + base;
            for (int ho = 0; ho < out_h; ++ho) {
                for (int wo = 0; wo < out_w; ++wo, ++oidx) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::int64_t best_idx = -1;
                    for (int ki = 0; ki < kernel_; ++ki) {
                        const int hi = ho * stride_ - pad_ + ki;
                        if (hi < 0 || hi >= height) continue;
                        for (int kj = 0; kj < kernel_; ++kj) {
                            const int wi = wo * stride_ - pad_ + kj;
                            if (wi < 0 || wi >= width) continue;
                            const double v = xc[static_cast<std::int64_t>(hi) * width + wi];
                            if (v > best) {
                                best = v;
                                best_idx = base + static_cast<std::int64_t>(hi) * width + wi;
                            }
                        }
                    }
                    y[oidx] = best_idx >= 0 ? best : 0.0;
                    argmax_[static_cast<std::size_t>(oidx)] = best_idx;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
    Tensor dx(input_shape_);
    for (std::int64_t i = 0; i < dy.size(); ++i) {
        const std::int64_t src = argmax_[static_cast<std::size_t>(i)];
        if (src >= 0) dx[src] += dy[i];
    }
    return dx;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, bool /*train*/) {
    const int batch = x.dim(0), channels = x.dim(1);
    height_ = x.dim(2);
    width_ = x.dim(3);
    const std::int64_t spatial = static_cast<std::int64_t>(height_) * width_;
    Tensor y({batch, channels});
    for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < channels; ++c) {
            const double* xc = x.data() + (static_cast<std::int64_t>(n) * channels + c) * spatial;
            double sum = 0.0;
            for (std::int64_t i = 0; i < spatial; ++i) sum += xc[i];
            y.at2(n, c) = sum / static_cast<double>(spatial);
        }
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) { return spread(dy, height_, width_); }

Tensor GlobalAvgPool::spread(const Tensor& dpooled, int height, int width) {
    const int batch = dpooled.dim(0), channels = dpooled.dim(1);
    const std::int64_t spatial = static_cast<std::int64_t>(height) * width;
    Tensor dx({batch, channels, height, width});
    for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < channels; ++c) {
            const double g = dpooled.at2(n, c) / static_cast<double>(spatial);
            double* dxc = dx.data() + (static_cast<std::int64_t>(n) * channels + c) * spatial;
            for (std::int64_t i = 0; i < spatial; ++i) dxc[i] = g;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::string name, int in_features, int out_features, Rng& rng)
    : in_(in_features), out_(out_features) {
    weight_.name = name + ".weight";
    weight_.value = Tensor({out_features, in_features});
    weight_.grad = Tensor(weight_.value.shape());
    bias_.name = name + ".bias";
    bias_.value = Tensor({out_features});
    bias_.grad = Tensor({out_features});
    reinitialize(rng);
}

void Linear::reinitialize(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : weight_.value.vec()) v = dist(rng);
    for (double& v : bias_.value.vec()) v = dist(rng);
}

Tensor Linear::forward(const Tensor& x, bool /*train*/) {
    if (x.ndim() != 2 || x.dim(1) != in_) throw ValidationError("linear input shape mismatch");
    input_ = x;
    const int batch = x.dim(0);
    Tensor y({batch, out_});
    ConstMapMat xm(x.data(), batch, in_);
    ConstMapMat wm(weight_.value.data(), out_, in_);
    MapMat ym(y.data(), batch, out_);
    ym.noalias() = xm * wm.transpose();
    for (int n = 0; n < batch; ++n) {
        for (int o = 0; o < out_; ++o) y.at2(n, o) += bias_.value[o];
    }
    return y;
}

Tensor Linear::backward(const Tensor& dy) {
    const int batch = input_.dim(0);
    ConstMapMat dym(dy.data(), batch, out_);
    ConstMapMat xm(input_.data(), batch, in_);
    MapMat dwm(weight_.grad.data(), out_, in_);
    dwm.noalias() += dym.transpose() * xm;
    for (int n = 0; n < batch; ++n) {
        for (int o = 0; o < out_; ++o) bias_.grad[o] += dy.at2(n, o);
    }
    return input_grad(dy);
}

Tensor Linear::input_grad(const Tensor& dy) const {
    const int batch = dy.dim(0);
    Tensor dx({batch, in_});
    ConstMapMat dym(dy.data(), batch, out_);
    ConstMapMat wm(weight_.value.data(), out_, in_);
    MapMat dxm(dx.data(), batch, in_);
    dxm.noalias() = dym * wm;
    return dx;
}

void Linear::collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& /*buffers*/) {
    params.push_back(&weight_);
    params.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// Sequential

Tensor Sequential::forward(const Tensor& x, bool train) {
    Tensor cur = x;
    for (auto& child : children_) cur = child->forward(cur, train);
    return cur;
}

Tensor Sequential::backward(const Tensor& dy) {
    Tensor cur = dy;
    for (auto it = children_.rbegin(); it != children_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
}

void Sequential::collect(std::vector<Parameter*>& params, std::vector<BufferVar*>& buffers) {
    for (auto& child : children_) child->collect(params, buffers);
}

void Sequential::collect_batchnorms(std::vector<BatchNorm2d*>& bns) {
    for (auto& child : children_) child->collect_batchnorms(bns);
}

}  // namespace rascore
