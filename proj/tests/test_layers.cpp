#include <doctest.h>

#include <cmath>
#include <random>

#include "rascore/layers.hpp"
#include "rascore/model.hpp"

using namespace rascore;

namespace {

// Scalar functional L(y) = sum_i w_i y_i used for gradient checks; dL/dy = w.
struct Probe {
    std::vector<double> weights;

    explicit Probe(std::int64_t n, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        weights.resize(static_cast<std::size_t>(n));
        for (double& w : weights) w = dist(rng);
    }

    double value(const Tensor& y) const {
        double acc = 0.0;
        for (std::int64_t i = 0; i < y.size(); ++i) acc += weights[static_cast<std::size_t>(i)] * y[i];
        return acc;
    }

    Tensor grad(const std::vector<int>& shape) const {
        Tensor g(shape);
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] = weights[static_cast<std::size_t>(i)];
        return g;
    }
};

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

void check_close(double analytic, double numeric, double rel = 1e-4, double abs = 1e-6) {
    const double tol = abs + rel * std::max(std::abs(analytic), std::abs(numeric));
    CHECK(std::abs(analytic - numeric) <= tol);
}

// Central-difference check of the input gradient of `layer`.
void check_input_grad(Layer& layer, Tensor x, std::mt19937_64& rng, int samples = 24,
                      double h = 1e-5) {
    Tensor y = layer.forward(x, true);
    Probe probe(y.size(), rng);
    const Tensor dx = layer.backward(probe.grad(y.shape()));
    REQUIRE(dx.shape() == x.shape());

    std::uniform_int_distribution<std::int64_t> pick(0, x.size() - 1);
    for (int s = 0; s < samples; ++s) {
        const std::int64_t i = pick(rng);
        const double orig = x[i];
        x[i] = orig + h;
        const double up = probe.value(layer.forward(x, true));
        x[i] = orig - h;
        const double down = probe.value(layer.forward(x, true));
        x[i] = orig;
        check_close(dx[i], (up - down) / (2.0 * h));
    }
}

// Central-difference check of parameter gradients.
void check_param_grads(Layer& layer, const Tensor& x, std::mt19937_64& rng, int samples_per_param = 6,
                       double h = 1e-5) {
    Tensor y = layer.forward(x, true);
    Probe probe(y.size(), rng);

    std::vector<Parameter*> params;
    std::vector<BufferVar*> buffers;
    layer.collect(params, buffers);
    for (Parameter* p : params) p->grad.fill(0.0);
    layer.backward(probe.grad(y.shape()));

    for (Parameter* p : params) {
        std::uniform_int_distribution<std::int64_t> pick(0, p->value.size() - 1);
        for (int s = 0; s < samples_per_param; ++s) {
            const std::int64_t i = pick(rng);
            const double orig = p->value[i];
            p->value[i] = orig + h;
            const double up = probe.value(layer.forward(x, true));
            p->value[i] = orig - h;
            const double down = probe.value(layer.forward(x, true));
            p->value[i] = orig;
            check_close(p->grad[i], (up - down) / (2.0 * h));
        }
    }
}

}  // namespace

TEST_CASE("conv2d known values: 1x1 kernel scales, centered 3x3 kernel is identity") {
    std::mt19937_64 rng(1);
    Conv2d scale("c", 1, 1, 1, 1, 0, 1, rng);
    scale.weight().value[0] = 2.0;
    Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor y = scale.forward(x, false);
    CHECK(y.shape() == std::vector<int>{1, 1, 2, 2});
    for (int i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(2.0 * x[i]));

    Conv2d ident("c", 1, 1, 3, 1, 1, 1, rng);
    ident.weight().value.fill(0.0);
    ident.weight().value[4] = 1.0;  // center tap
    Tensor y2 = ident.forward(x, false);
    for (int i = 0; i < 4; ++i) CHECK(y2[i] == doctest::Approx(x[i]));
}

TEST_CASE("conv2d output geometry") {
    std::mt19937_64 rng(2);
    Conv2d conv("c", 3, 8, 3, 2, 1, 1, rng);
    Tensor x = random_tensor({2, 3, 9, 11}, rng);
    Tensor y = conv.forward(x, false);
    CHECK(y.shape() == std::vector<int>{2, 8, 5, 6});
    CHECK_THROWS_AS(Conv2d("bad", 3, 4, 3, 1, 1, 2, rng), ConfigError);  // 3 % 2 != 0
}

TEST_CASE("conv2d gradients match finite differences") {
    std::mt19937_64 rng(3);
    SUBCASE("strided padded 3x3") {
        Conv2d conv("c", 3, 4, 3, 2, 1, 1, rng);
        Tensor x = random_tensor({2, 3, 5, 6}, rng);
        check_input_grad(conv, x, rng);
        check_param_grads(conv, x, rng);
    }
    SUBCASE("depthwise") {
        Conv2d conv("c", 4, 4, 3, 1, 1, 4, rng);
        Tensor x = random_tensor({2, 4, 5, 5}, rng);
        check_input_grad(conv, x, rng);
        check_param_grads(conv, x, rng);
    }
    SUBCASE("grouped 1x1") {
        Conv2d conv("c", 4, 6, 1, 1, 0, 2, rng);
        Tensor x = random_tensor({3, 4, 4, 4}, rng);
        check_input_grad(conv, x, rng);
        check_param_grads(conv, x, rng);
    }
}

TEST_CASE("batch norm training mode: batch statistics and running updates") {
    BatchNorm2d bn("bn", 2);
    Tensor x({2, 2, 1, 2}, {1.0, 3.0, 10.0, 14.0, 5.0, 7.0, 22.0, 18.0});
    Tensor y = bn.forward(x, true);

    // Channel 0 holds {1,3,5,7}: mean 4, biased var 5.
    const double inv = 1.0 / std::sqrt(5.0 + 1e-5);
    CHECK(y[0] == doctest::Approx((1.0 - 4.0) * inv));
    CHECK(y[1] == doctest::Approx((3.0 - 4.0) * inv));

    std::vector<Parameter*> params;
    std::vector<BufferVar*> buffers;
    bn.collect(params, buffers);
    // momentum 0.1, unbiased variance (m=4): 5 * 4/3
    CHECK(buffers[0]->value[0] == doctest::Approx(0.1 * 4.0));
    CHECK(buffers[1]->value[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 5.0 * 4.0 / 3.0));
}

TEST_CASE("batch norm eval and frozen modes use running statistics") {
    BatchNorm2d bn("bn", 1);
    std::vector<Parameter*> params;
    std::vector<BufferVar*> buffers;
    bn.collect(params, buffers);
    buffers[0]->value[0] = 2.0;  // running mean
    buffers[1]->value[0] = 4.0;  // running var
    params[0]->value[0] = 3.0;   // gamma
    params[1]->value[0] = 0.5;   // beta

    Tensor x({1, 1, 1, 2}, {6.0, 2.0});
    Tensor y = bn.forward(x, false);
    CHECK(y[0] == doctest::Approx(3.0 * (6.0 - 2.0) / std::sqrt(4.0 + 1e-5) + 0.5));
    CHECK(y[1] == doctest::Approx(0.5).epsilon(1e-6));

    // Frozen: training-mode forward behaves like eval and leaves the
    // running statistics untouched.
    bn.set_frozen(true);
    Tensor y2 = bn.forward(x, true);
    CHECK(y2[0] == doctest::Approx(y[0]));
    CHECK(buffers[0]->value[0] == 2.0);
    CHECK(buffers[1]->value[0] == 4.0);
}

TEST_CASE("batch norm gradients match finite differences") {
    std::mt19937_64 rng(4);
    SUBCASE("training mode") {
        BatchNorm2d bn("bn", 3);
        Tensor x = random_tensor({2, 3, 3, 3}, rng);
        check_input_grad(bn, x, rng);
        check_param_grads(bn, x, rng);
    }
    SUBCASE("eval mode") {
        BatchNorm2d bn("bn", 2);
        std::vector<Parameter*> params;
        std::vector<BufferVar*> buffers;
        bn.collect(params, buffers);
        buffers[0]->value.vec() = {0.3, -0.2};
        buffers[1]->value.vec() = {1.5, 0.8};
        Tensor x = random_tensor({2, 2, 2, 2}, rng);
        // forward in eval, then finite differences in eval mode
        Tensor y = bn.forward(x, false);
        Probe probe(y.size(), rng);
        Tensor dx = bn.backward(probe.grad(y.shape()));
        const double h = 1e-6;
        for (std::int64_t i = 0; i < x.size(); i += 3) {
            const double orig = x[i];
            x[i] = orig + h;
            const double up = probe.value(bn.forward(x, false));
            x[i] = orig - h;
            const double down = probe.value(bn.forward(x, false));
            x[i] = orig;
            check_close(dx[i], (up - down) / (2.0 * h));
        }
    }
}

TEST_CASE("activations: values and gradients") {
    Activation relu(Activation::Kind::relu);
    Activation relu6(Activation::Kind::relu6);
    Tensor x({1, 1, 1, 4}, {-2.0, 0.5, 5.0, 8.0});
    Tensor yr = relu.forward(x, true);
    CHECK(yr.vec() == std::vector<double>{0.0, 0.5, 5.0, 8.0});
    Tensor y6 = relu6.forward(x, true);
    CHECK(y6.vec() == std::vector<double>{0.0, 0.5, 5.0, 6.0});

    std::mt19937_64 rng(5);
    // Inputs away from the kinks at 0 and 6.
    Tensor xr = random_tensor({2, 3, 4, 4}, rng, 0.1, 5.9);
    for (std::int64_t i = 0; i < xr.size(); i += 2) xr[i] = -xr[i] - 0.1;
    check_input_grad(relu, xr, rng);
    check_input_grad(relu6, xr, rng);
}

TEST_CASE("max pool: known window maxima and gradient routing") {
    MaxPool2d pool(2, 2, 0);
    Tensor x({1, 1, 4, 4}, {1, 2, 5, 4,
                            3, 0, 1, 1,
                            9, 2, 7, 3,
                            1, 8, 2, 6});
    Tensor y = pool.forward(x, true);
    CHECK(y.shape() == std::vector<int>{1, 1, 2, 2});
    CHECK(y.vec() == std::vector<double>{3, 5, 9, 7});

    Tensor dy({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor dx = pool.backward(dy);
    CHECK(dx[4] == 1.0);   // 3 at (1,0)
    CHECK(dx[2] == 2.0);   // 5 at (0,2)
    CHECK(dx[8] == 3.0);   // 9 at (2,0)
    CHECK(dx[10] == 4.0);  // 7 at (2,2)

    std::mt19937_64 rng(6);
    MaxPool2d stem_pool(3, 2, 1);
    Tensor xr = random_tensor({2, 3, 8, 8}, rng);
    check_input_grad(stem_pool, xr, rng);
}

TEST_CASE("global average pool and linear layers") {
    GlobalAvgPool gap;
    Tensor x({1, 2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
    Tensor y = gap.forward(x, true);
    CHECK(y.vec() == std::vector<double>{2.5, 25.0});

    std::mt19937_64 rng(7);
    Tensor xr = random_tensor({2, 3, 4, 4}, rng);
    check_input_grad(gap, xr, rng);

    Linear linear("fc", 4, 3, rng);
    Tensor xl = random_tensor({5, 4}, rng);
    check_input_grad(linear, xl, rng);
    check_param_grads(linear, xl, rng);

    // input_grad must not touch parameter gradients
    linear.weight().grad.fill(0.0);
    linear.bias().grad.fill(0.0);
    Tensor dy = random_tensor({5, 3}, rng);
    linear.forward(xl, true);
    (void)linear.input_grad(dy);
    for (std::int64_t i = 0; i < linear.weight().grad.size(); ++i) {
        CHECK(linear.weight().grad[i] == 0.0);
    }
}

TEST_CASE("desk-scale model end-to-end gradients match finite differences") {
    // Exercises the residual blocks, downsample paths and the full backward
    // wiring on every backbone family.
    std::mt19937_64 rng(8);
    const std::vector<ModelSpec> specs = {
        {BackboneKind::resnet34, HeadKind::regression, FreezeScheme::none, true},
        {BackboneKind::resnet50, HeadKind::regression, FreezeScheme::none, true},
        {BackboneKind::mobilenetv2, HeadKind::classification, FreezeScheme::none, true},
    };
    for (const ModelSpec& spec : specs) {
        CAPTURE(to_string(spec.backbone));
        Model model(spec, 99);
        Tensor x = random_tensor({2, 1, 32, 32}, rng, -0.5, 0.5);

        Tensor out = model.forward(x, true);
        Probe probe(out.size(), rng);
        model.zero_grad();
        Tensor dx = model.backward(probe.grad(out.shape()));

        // A sample of input positions.
        std::uniform_int_distribution<std::int64_t> pick(0, x.size() - 1);
        const double h = 1e-5;
        for (int s = 0; s < 6; ++s) {
            const std::int64_t i = pick(rng);
            const double orig = x[i];
            x[i] = orig + h;
            const double up = probe.value(model.forward(x, true));
            x[i] = orig - h;
            const double down = probe.value(model.forward(x, true));
            x[i] = orig;
            check_close(dx[i], (up - down) / (2.0 * h), 5e-4, 1e-6);
        }

        // A sample of parameters spread across the depth.
        const auto& params = model.parameters();
        for (std::size_t pi = 0; pi < params.size(); pi += std::max<std::size_t>(1, params.size() / 12)) {
            Parameter* p = params[pi];
            std::uniform_int_distribution<std::int64_t> pick_w(0, p->value.size() - 1);
            const std::int64_t i = pick_w(rng);
            const double orig = p->value[i];
            p->value[i] = orig + h;
            const double up = probe.value(model.forward(x, true));
            p->value[i] = orig - h;
            const double down = probe.value(model.forward(x, true));
            p->value[i] = orig;
            CAPTURE(p->name);
            check_close(p->grad[i], (up - down) / (2.0 * h), 5e-4, 1e-6);
        }
    }
}

TEST_CASE("scratch forward is finite") {
    for (BackboneKind kind :
         {BackboneKind::resnet34, BackboneKind::resnet50, BackboneKind::mobilenetv2}) {
        Model model({kind, HeadKind::classification, FreezeScheme::none, true}, 12345);
        std::mt19937_64 rng(10);
        Tensor x = random_tensor({2, 1, 32, 32}, rng, -2.0, 2.0);
        const Tensor out = model.forward(x, false);
        CHECK(all_finite(out));
        CHECK(all_finite(model.features()));
    }
}
