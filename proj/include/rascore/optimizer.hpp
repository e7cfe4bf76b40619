#pragma once

#include <vector>

#include "rascore/layers.hpp"

namespace rascore {

/// Plain SGD with momentum and (coupled) weight decay, no schedule:
///   v <- momentum * v + (grad + weight_decay * p)
///   p <- p - lr * v
/// Non-trainable parameters are skipped entirely, so a freeze plan keeps them
/// bit-identical through any number of steps.
class SgdOptimizer {
public:
    SgdOptimizer(std::vector<Parameter*> params, double lr, double momentum, double weight_decay);

    void zero_grad();
    void step();

private:
    std::vector<Parameter*> params_;
    std::vector<Tensor> velocity_;
    double lr_, momentum_, weight_decay_;
};

}  // namespace rascore
