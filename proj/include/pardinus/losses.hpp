// ============================================================================
// losses.hpp - reconstruction losses with analytic gradients
//
// Correntropy: L = -(1/P) * sum_i exp(-(y_i - yhat_i)^2 / (2 sigma^2)),
// bounded in [-1, 0] and equal to -1 exactly when yhat == y. The Gaussian
// kernel saturates for large errors, which is what gives the loss its
// tolerance to outlier pixels. MSE is the plain mean squared error.
// ============================================================================

#pragma once

#include "pardinus/tensor.hpp"

namespace pardinus::nn {

template <typename T>
struct LossValue {
    double value = 0.0;
    Tensor4<T> grad; // dL/d(yhat)
};

template <typename T>
LossValue<T> correntropy_loss(const Tensor4<T>& y, const Tensor4<T>& yhat, double sigma) {
    if (!y.same_shape(yhat)) throw ShapeMismatch("correntropy_loss: shape mismatch");
    if (!(sigma > 0.0)) throw NonPositiveSigma("correntropy_loss: sigma must be > 0");

    const double inv_p = 1.0 / double(y.size());
    const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
    const double inv_s2 = 1.0 / (sigma * sigma);

    LossValue<T> result;
    result.grad = Tensor4<T>(yhat.n, yhat.c, yhat.h, yhat.w);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = double(y.data[i]) - double(yhat.data[i]);
        const double kernel = std::exp(-e * e * inv_2s2);
        acc += kernel;
        // d/d(yhat) of -kernel/P
        result.grad.data[i] = T(-inv_p * kernel * e * inv_s2);
    }
    result.value = -acc * inv_p;
    return result;
}

template <typename T>
LossValue<T> mse_loss(const Tensor4<T>& y, const Tensor4<T>& yhat) {
    if (!y.same_shape(yhat)) throw ShapeMismatch("mse_loss: shape mismatch");

    const double inv_p = 1.0 / double(y.size());
    LossValue<T> result;
    result.grad = Tensor4<T>(yhat.n, yhat.c, yhat.h, yhat.w);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = double(yhat.data[i]) - double(y.data[i]);
        acc += e * e;
        result.grad.data[i] = T(2.0 * inv_p * e);
    }
    result.value = acc * inv_p;
    return result;
}

} // namespace pardinus::nn
