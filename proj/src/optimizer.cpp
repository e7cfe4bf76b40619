#include "rascore/optimizer.hpp"

namespace rascore {

SgdOptimizer::SgdOptimizer(std::vector<Parameter*> params, double lr, double momentum,
                           double weight_decay)
    : params_(std::move(params)), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
    velocity_.reserve(params_.size());
    for (const Parameter* p : params_) velocity_.emplace_back(p->value.shape());
}

void SgdOptimizer::zero_grad() {
    for (Parameter* p : params_) p->grad.fill(0.0);
}

void SgdOptimizer::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter* p = params_[i];
        if (!p->trainable) continue;
        Tensor& v = velocity_[i];
        for (std::int64_t j = 0; j < p->value.size(); ++j) {
            const double g = p->grad[j] + weight_decay_ * p->value[j];
            v[j] = momentum_ * v[j] + g;
            p->value[j] -= lr_ * v[j];
        }
    }
}

}  // namespace rascore
