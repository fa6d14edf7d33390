#include <catch2/catch.hpp>

#include "gradient_check.hpp"
#include "pardinus/losses.hpp"
#include "pardinus/network.hpp"

using namespace pardinus;
using namespace pardinus::nn;

TEST_CASE("conv2d with an identity kernel passes channels through", "[nn]") {
    Network<float> net({2, 3, 3}, {LayerSpec::conv2d(2, Activation::linear)});
    // W[o][i][1][1] = (o == i), zero bias
    auto& p = net.params().layers[0];
    std::fill(p.w.begin(), p.w.end(), 0.0f);
    for (int o = 0; o < 2; ++o) p.w[detail::widx(o, o, 1, 1, 2)] = 1.0f;

    Tensor4<float> x(1, 2, 3, 3);
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = float(i) * 0.1f;
    const Tensor4<float> y = net.forward(x);
    REQUIRE(y.same_shape(x));
    CHECK(y.data == x.data);
}

TEST_CASE("maxpool2 picks window maxima", "[nn]") {
    Network<float> net({1, 2, 2}, {LayerSpec::maxpool2()});
    Tensor4<float> x(1, 1, 2, 2);
    x.data = {1, 2, 3, 4};
    const Tensor4<float> y = net.forward(x);
    REQUIRE(y.data.size() == 1);
    CHECK(y.data[0] == 4.0f);

    SECTION("odd dims are rejected") {
        CHECK_THROWS_AS(Network<float>({1, 3, 3}, {LayerSpec::maxpool2()}), ShapeMismatch);
    }
}

TEST_CASE("upsample2 doubles and repeats", "[nn]") {
    Network<float> net({1, 1, 2}, {LayerSpec::upsample2()});
    Tensor4<float> x(1, 1, 1, 2);
    x.data = {3, 7};
    const Tensor4<float> y = net.forward(x);
    REQUIRE(y.h == 2);
    REQUIRE(y.w == 4);
    CHECK(y.data == std::vector<float>{3, 3, 7, 7, 3, 3, 7, 7});
}

TEST_CASE("network shape algebra", "[nn]") {
    SECTION("four pools divide by 16, four upsamples invert") {
        std::vector<LayerSpec> encoder = {
            LayerSpec::conv2d(4, Activation::relu), LayerSpec::maxpool2(),
            LayerSpec::conv2d(4, Activation::relu), LayerSpec::maxpool2(),
            LayerSpec::conv2d(4, Activation::relu), LayerSpec::maxpool2(),
            LayerSpec::conv2d(4, Activation::relu), LayerSpec::maxpool2(),
        };
        Network<float> net({3, 64, 96}, encoder);
        CHECK(net.output_shape() == Shape3{4, 4, 6});
    }

    SECTION("sigmoid off the final layer is rejected") {
        CHECK_THROWS_AS(Network<float>({3, 4, 4}, {LayerSpec::conv2d(2, Activation::sigmoid),
                                                   LayerSpec::maxpool2()}),
                        ShapeMismatch);
    }

    SECTION("reshape must conserve element count") {
        CHECK_THROWS_AS(Network<float>({4, 1, 1}, {LayerSpec::reshape(2, 2, 2)}), ShapeMismatch);
    }

    SECTION("forward rejects mismatched batches") {
        Network<float> net({2, 4, 4}, {LayerSpec::conv2d(1, Activation::linear)});
        CHECK_THROWS_AS(net.forward(Tensor4<float>(1, 2, 3, 3)), ShapeMismatch);
    }
}

TEST_CASE("backward requires a fresh trace", "[nn]") {
    Network<float> net({2, 2, 2}, {LayerSpec::conv2d(2, Activation::linear)});
    net.init_params(1);
    Tensor4<float> x(1, 2, 2, 2, 0.5f);

    ForwardTrace<float> trace;
    net.forward(x, &trace);
    const Tensor4<float> ones(1, 2, 2, 2, 1.0f);

    SECTION("zero grad output gives zero gradients") {
        const Gradients<float> g = net.backward(trace, Tensor4<float>(1, 2, 2, 2, 0.0f));
        for (float v : g.layers[0].w) CHECK(v == 0.0f);
        for (float v : g.layers[0].b) CHECK(v == 0.0f);
        for (float v : g.input.data) CHECK(v == 0.0f);
    }

    SECTION("trace from before an update is rejected") {
        const Gradients<float> g = net.backward(trace, ones);
        net.adam_step(g, 0.001f);
        CHECK_THROWS_AS(net.backward(trace, ones), StaleCache);
    }
}

TEST_CASE("dense backward matches the closed form on a linear layer", "[nn]") {
    Network<float> net({3, 1, 1}, {LayerSpec::dense(2, Activation::linear)});
    net.init_params(7);
    Tensor4<float> x(1, 3, 1, 1);
    x.data = {0.5f, -1.0f, 2.0f};

    ForwardTrace<float> trace;
    net.forward(x, &trace);
    Tensor4<float> grad_out(1, 2, 1, 1);
    grad_out.data = {1.0f, -2.0f};
    const Gradients<float> g = net.backward(trace, grad_out);

    // dL/dW[u][j] = grad[u] * x[j]
    for (int u = 0; u < 2; ++u)
        for (int j = 0; j < 3; ++j)
            CHECK(g.layers[0].w[std::size_t(u) * 3 + j] ==
                  Approx(grad_out.data[u] * x.data[j]).margin(1e-7));
    CHECK(g.layers[0].b[0] == 1.0f);
    CHECK(g.layers[0].b[1] == -2.0f);
}

TEST_CASE("every layer type passes central finite differences", "[nn]") {
    Rng rng(2024);
    for (const auto& layer_case : gradcheck::layer_cases()) {
        INFO(layer_case.name);
        nn::Network<double> net = layer_case.make();
        const auto input = gradcheck::random_tensor(layer_case.batch, layer_case.input, rng);
        nn::Tensor4<double> in_copy = input;
        const double err = gradcheck::check_network(net, in_copy, rng);
        CHECK(err <= gradcheck::kRelTol);
    }
}

TEST_CASE("correntropy loss", "[nn]") {
    SECTION("perfect reconstruction gives loss -1 and zero grad") {
        Tensor4<double> y(2, 1, 2, 2, 0.3);
        const LossValue<double> loss = correntropy_loss(y, y, 0.2);
        CHECK(loss.value == Approx(-1.0).margin(1e-12));
        for (double v : loss.grad.data) CHECK(v == Approx(0.0).margin(1e-12));
    }

    SECTION("single element at one kernel width") {
        Tensor4<double> y(1, 1, 1, 1, 0.0);
        Tensor4<double> yhat(1, 1, 1, 1, 0.2);
        const LossValue<double> loss = correntropy_loss(y, yhat, 0.2);
        CHECK(loss.value == Approx(-std::exp(-0.5)).epsilon(1e-12));
    }

    SECTION("bounded in [-1, 0]") {
        Rng rng(5);
        for (int t = 0; t < 20; ++t) {
            auto y = gradcheck::random_tensor(1, {2, 3, 3}, rng, 0.0, 1.0);
            auto yhat = gradcheck::random_tensor(1, {2, 3, 3}, rng, 0.0, 1.0);
            const double v = correntropy_loss(y, yhat, 0.2).value;
            CHECK(v >= -1.0);
            CHECK(v <= 0.0);
        }
    }

    SECTION("gradient matches finite differences") {
        Rng rng(6);
        for (double sigma : {0.1, 0.2, 0.5}) {
            auto y = gradcheck::random_tensor(2, {1, 2, 3}, rng, 0.0, 1.0);
            auto yhat = gradcheck::random_tensor(2, {1, 2, 3}, rng, 0.0, 1.0);
            const double err = gradcheck::check_loss(
                [sigma](const auto& a, const auto& b) { return correntropy_loss(a, b, sigma); }, y,
                yhat);
            CHECK(err <= 1e-5);
        }
    }

    SECTION("translation symmetric: shifting both tensors changes nothing") {
        Rng rng(8);
        auto y = gradcheck::random_tensor(1, {2, 2, 2}, rng, 0.0, 0.5);
        auto yhat = gradcheck::random_tensor(1, {2, 2, 2}, rng, 0.0, 0.5);
        auto y2 = y;
        auto yhat2 = yhat;
        for (double& v : y2.data) v += 0.3;
        for (double& v : yhat2.data) v += 0.3;
        CHECK(correntropy_loss(y, yhat, 0.2).value ==
              Approx(correntropy_loss(y2, yhat2, 0.2).value).margin(1e-12));
    }

    SECTION("shape and sigma preconditions") {
        Tensor4<double> y(1, 1, 2, 2, 0.0);
        CHECK_THROWS_AS(correntropy_loss(y, Tensor4<double>(1, 1, 2, 3, 0.0), 0.2), ShapeMismatch);
        CHECK_THROWS_AS(correntropy_loss(y, y, 0.0), NonPositiveSigma);
        CHECK_THROWS_AS(correntropy_loss(y, y, -1.0), NonPositiveSigma);
    }
}

TEST_CASE("mse loss", "[nn]") {
    Tensor4<double> y(1, 1, 1, 1, 0.0);
    Tensor4<double> yhat(1, 1, 1, 1, 1.0);
    CHECK(mse_loss(y, y).value == Approx(0.0).margin(1e-12));
    CHECK(mse_loss(y, yhat).value == Approx(1.0).epsilon(1e-12));

    SECTION("gradient is 2(yhat-y)/P and matches finite differences") {
        Rng rng(9);
        auto a = gradcheck::random_tensor(2, {2, 2, 2}, rng);
        auto b = gradcheck::random_tensor(2, {2, 2, 2}, rng);
        const LossValue<double> loss = mse_loss(a, b);
        for (std::size_t i = 0; i < a.data.size(); ++i)
            CHECK(loss.grad.data[i] ==
                  Approx(2.0 * (b.data[i] - a.data[i]) / double(a.data.size())).margin(1e-12));
        const double err = gradcheck::check_loss(
            [](const auto& x, const auto& z) { return mse_loss(x, z); }, a, b);
        CHECK(err <= 1e-5);
    }
}

TEST_CASE("adam_step", "[nn]") {
    SECTION("zero gradients leave parameters unchanged and bump the step") {
        Network<float> net({4, 1, 1}, {LayerSpec::dense(3, Activation::linear)});
        net.init_params(3);
        const std::vector<float> before = net.params().layers[0].w;
        net.adam_step(net.make_gradients(), 0.01f);
        CHECK(net.params().layers[0].w == before);
        CHECK(net.params().step == 1);
    }

    SECTION("first step moves by about lr in the gradient sign direction") {
        Network<float> net({2, 1, 1}, {LayerSpec::dense(2, Activation::linear)});
        net.init_params(4);
        const std::vector<float> before = net.params().layers[0].w;
        Gradients<float> g = net.make_gradients();
        g.layers[0].w = {0.7f, -0.3f, 1.9f, -2.4f};
        const float lr = 0.05f;
        net.adam_step(g, lr);
        for (std::size_t j = 0; j < before.size(); ++j) {
            const float delta = net.params().layers[0].w[j] - before[j];
            const float expected = -lr * (g.layers[0].w[j] > 0 ? 1.0f : -1.0f);
            CHECK(delta == Approx(expected).epsilon(1e-3));
        }
    }

    SECTION("drives a quadratic to near zero in 100 steps") {
        // f(w) = w^2 optimized through the raw update with grad 2w
        Network<float> net({1, 1, 1}, {LayerSpec::dense(1, Activation::linear)});
        net.params().layers[0].w = {1.0f};
        for (int step = 0; step < 100; ++step) {
            Gradients<float> g = net.make_gradients();
            g.layers[0].w = {2.0f * net.params().layers[0].w[0]};
            net.adam_step(g, 0.05f);
        }
        const float w = net.params().layers[0].w[0];
        CHECK(w * w < 1e-2f);
    }

    SECTION("mismatched gradient shapes are rejected") {
        Network<float> net({2, 1, 1}, {LayerSpec::dense(2, Activation::linear)});
        net.init_params(5);
        Gradients<float> g = net.make_gradients();
        g.layers[0].w.pop_back();
        CHECK_THROWS_AS(net.adam_step(g, 0.01f), ShapeMismatch);
    }
}

TEST_CASE("forward is deterministic", "[nn]") {
    Network<float> net({3, 8, 8}, {LayerSpec::conv2d(4, Activation::relu), LayerSpec::maxpool2(),
                                   LayerSpec::flatten(), LayerSpec::dense(5, Activation::linear)});
    net.init_params(11);
    Rng rng(12);
    Tensor4<float> x(2, 3, 8, 8);
    for (float& v : x.data) v = float(rng.next_double());
    const Tensor4<float> a = net.forward(x);
    const Tensor4<float> b = net.forward(x);
    CHECK(a.data == b.data);
}
