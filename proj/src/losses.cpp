#include "rascore/losses.hpp"

#include <cmath>
#include <sstream>

namespace rascore {

namespace {

void require_nonempty(const std::vector<double>& residuals) {
    if (residuals.empty()) throw ValidationError("loss requires at least one residual");
}

double smooth_term(double x, const SmoothLossParams& p) {
    return std::abs(x) < p.c ? p.a * x * x : std::abs(x) - p.b;
}

void check_labels(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.ndim() != 2) throw ValidationError("logits must be a (n,k) matrix");
    if (static_cast<std::size_t>(logits.dim(0)) != labels.size()) {
        throw ValidationError("logits and labels must have equal length");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= logits.dim(1)) {
            std::ostringstream msg;
            msg << "label " << labels[i] << " at row " << i << " is outside [0," << logits.dim(1) - 1
                << "]";
            throw ValidationError(msg.str());
        }
    }
}

}  // namespace

double mse_loss(const std::vector<double>& residuals) {
    require_nonempty(residuals);
    double sum = 0.0;
    for (double r : residuals) sum += r * r;
    return sum / static_cast<double>(residuals.size());
}

std::vector<double> mse_loss_grad(const std::vector<double>& residuals) {
    require_nonempty(residuals);
    const double n = static_cast<double>(residuals.size());
    std::vector<double> grad(residuals.size());
    for (std::size_t i = 0; i < residuals.size(); ++i) grad[i] = 2.0 * residuals[i] / n;
    return grad;
}

double smooth_loss(const std::vector<double>& residuals, const SmoothLossParams& params) {
    require_nonempty(residuals);
    if (params.c <= 0.0) throw ValidationError("smooth loss requires c > 0");
    double sum = 0.0;
    for (double r : residuals) sum += smooth_term(r, params);
    return std::sqrt(sum / static_cast<double>(residuals.size()));
}

std::vector<double> smooth_loss_grad(const std::vector<double>& residuals,
                                     const SmoothLossParams& params) {
    const double loss = smooth_loss(residuals, params);
    const double n = static_cast<double>(residuals.size());
    std::vector<double> grad(residuals.size(), 0.0);
    if (loss == 0.0) return grad;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        const double x = residuals[i];
        const double ds = std::abs(x) < params.c ? 2.0 * params.a * x
                                                 : (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
        grad[i] = ds / (2.0 * n * loss);
    }
    return grad;
}

Tensor softmax(const Tensor& logits) {
    Tensor probs(logits.shape());
    const int rows = logits.dim(0), cols = logits.dim(1);
    for (int r = 0; r < rows; ++r) {
        double max_logit = logits.at2(r, 0);
        for (int c = 1; c < cols; ++c) max_logit = std::max(max_logit, logits.at2(r, c));
        double denom = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double e = std::exp(logits.at2(r, c) - max_logit);
            probs.at2(r, c) = e;
            denom += e;
        }
        for (int c = 0; c < cols; ++c) probs.at2(r, c) /= denom;
    }
    return probs;
}

double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    if (labels.empty()) throw ValidationError("loss requires at least one sample");
    const int rows = logits.dim(0), cols = logits.dim(1);
    double sum = 0.0;
    for (int r = 0; r < rows; ++r) {
        double max_logit = logits.at2(r, 0);
        for (int c = 1; c < cols; ++c) max_logit = std::max(max_logit, logits.at2(r, c));
        double lse = 0.0;
        for (int c = 0; c < cols; ++c) lse += std::exp(logits.at2(r, c) - max_logit);
        lse = max_logit + std::log(lse);
        sum += lse - logits.at2(r, labels[static_cast<std::size_t>(r)]);
    }
    return sum / static_cast<double>(rows);
}

Tensor cross_entropy_grad(const Tensor& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    Tensor grad = softmax(logits);
    const int rows = logits.dim(0);
    const double n = static_cast<double>(rows);
    for (int r = 0; r < rows; ++r) {
        grad.at2(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    }
    for (std::int64_t i = 0; i < grad.size(); ++i) grad[i] /= n;
    return grad;
}

}  // namespace rascore
