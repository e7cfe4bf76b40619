#pragma once

#include <vector>

#include "rascore/tensor.hpp"

namespace rascore {

/// Constants of the piecewise smooth regression loss; the adopted values are
/// a=0.6, b=0, c=1.0.
struct SmoothLossParams {
    double a = 0.6;
    double b = 0.0;
    double c = 1.0;
};

/// Mean squared residual.
double mse_loss(const std::vector<double>& residuals);
/// d(mse)/d(residual_i) = 2 r_i / n.
std::vector<double> mse_loss_grad(const std::vector<double>& residuals);

/// sqrt( mean_i s(r_i) ) with s(x) = a x^2 for |x| < c, |x| - b otherwise.
/// The branch condition is implemented exactly as written: at |x| = c the
/// second branch applies, so with the default constants s jumps from 0.6 to
/// 1.0 there.
double smooth_loss(const std::vector<double>& residuals, const SmoothLossParams& params = {});
/// Chain rule through the square root; zero at an all-zero residual vector
/// (the loss minimum, where the derivative is otherwise undefined).
std::vector<double> smooth_loss_grad(const std::vector<double>& residuals,
                                     const SmoothLossParams& params = {});

/// Mean negative log softmax probability of the true class. Logits are (n,k).
double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels);
/// (softmax - onehot) / n.
Tensor cross_entropy_grad(const Tensor& logits, const std::vector<int>& labels);

/// Row-wise softmax of an (n,k) logit matrix.
Tensor softmax(const Tensor& logits);

}  // namespace rascore
