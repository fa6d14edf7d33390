// ============================================================================
// layers.hpp - layer specs and forward/backward kernels
//
// Supported layers: 3x3 stride-1 same-padding convolution and transposed
// convolution, 2x2 max pooling, nearest-neighbor 2x upsampling, dense,
// flatten and reshape. Convolutions run through im2col plus a small GEMM.
// ============================================================================

#pragma once

#include <string>
#include <vector>

#include "pardinus/tensor.hpp"

namespace pardinus::nn {

enum class Activation { relu, sigmoid, linear };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        default: return "linear";
    }
}

enum class LayerKind { conv2d, maxpool2, dense, upsample2, tconv2d, flatten, reshape };

inline const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::maxpool2: return "maxpool2";
        case LayerKind::dense: return "dense";
        case LayerKind::upsample2: return "upsample2";
        case LayerKind::tconv2d: return "tconv2d";
        case LayerKind::flatten: return "flatten";
        default: return "reshape";
    }
}

struct LayerSpec {
    LayerKind kind = LayerKind::flatten;
    int units = 0;                        // conv/tconv out channels, dense units
    Activation act = Activation::linear;  // conv/tconv/dense only
    Shape3 target{};                      // reshape only

    static LayerSpec conv2d(int out_channels, Activation act) {
        return {LayerKind::conv2d, out_channels, act, {}};
    }
    static LayerSpec tconv2d(int out_channels, Activation act) {
        return {LayerKind::tconv2d, out_channels, act, {}};
    }
    static LayerSpec maxpool2() { return {LayerKind::maxpool2, 0, Activation::linear, {}}; }
    static LayerSpec upsample2() { return {LayerKind::upsample2, 0, Activation::linear, {}}; }
    static LayerSpec dense(int units, Activation act) {
        return {LayerKind::dense, units, act, {}};
    }
    static LayerSpec flatten() { return {LayerKind::flatten, 0, Activation::linear, {}}; }
    static LayerSpec reshape(int c, int h, int w) {
        return {LayerKind::reshape, 0, Activation::linear, {c, h, w}};
    }
};

namespace detail {

// C[M][N] += A[M][K] * B[K][N], all row-major. The ikj order keeps the inner
// loop contiguous so the compiler can vectorize it.
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + std::size_t(i) * k;
        T* crow = c + std::size_t(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const T aik = arow[kk];
            const T* brow = b + std::size_t(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

// im2col for a 3x3 same-padding window: cols has in_c*9 rows of h*w
template <typename T>
void im2col3x3(const T* in, int in_c, int h, int w, T* cols) {
    const std::size_t plane = std::size_t(h) * w;
    for (int ci = 0; ci < in_c; ++ci) {
        const T* src = in + std::size_t(ci) * plane;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                T* dst = cols + (std::size_t(ci) * 9 + ky * 3 + kx) * plane;
                const int dy = ky - 1, dx = kx - 1;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    T* drow = dst + std::size_t(y) * w;
                    if (sy < 0 || sy >= h) {
                        std::fill(drow, drow + w, T(0));
                        continue;
                    }
                    const T* srow = src + std::size_t(sy) * w;
                    const int x_lo = std::max(0, -dx);
                    const int x_hi = std::min(w, w - dx);
                    for (int x = 0; x < x_lo; ++x) drow[x] = T(0);
                    for (int x = x_lo; x < x_hi; ++x) drow[x] = srow[x + dx];
                    for (int x = x_hi; x < w; ++x) drow[x] = T(0);
                }
            }
        }
    }
}

// weight index helper: weights are stored [out_c][in_c][ky][kx]
inline std::size_t widx(int oc, int ic, int ky, int kx, int in_c) {
    return ((std::size_t(oc) * in_c + ic) * 3 + ky) * 3 + kx;
}

// Repack raw conv weights into a GEMM A matrix.
//   swap=false: rows are out_c, columns (in_c, ky, kx)  -> [out_c][in_c*9]
//   swap=true:  rows are in_c, columns (out_c, ky, kx)  -> [in_c][out_c*9]
// `flip` rotates the 3x3 window 180 degrees. The four (flip, swap)
// combinations cover conv/tconv forward and both input-gradient passes.
template <typename T>
void pack_weights(const T* wsrc, int out_c, int in_c, bool flip, bool swap, std::vector<T>& packed) {
    packed.resize(std::size_t(out_c) * in_c * 9);
    for (int oc = 0; oc < out_c; ++oc)
        for (int ic = 0; ic < in_c; ++ic)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                    const int sy = flip ? 2 - ky : ky;
                    const int sx = flip ? 2 - kx : kx;
                    const std::size_t row = swap ? std::size_t(ic) : std::size_t(oc);
                    const std::size_t col = swap ? std::size_t(oc) * 9 + ky * 3 + kx
                                                 : std::size_t(ic) * 9 + ky * 3 + kx;
                    const std::size_t cols_n = swap ? std::size_t(out_c) * 9 : std::size_t(in_c) * 9;
                    packed[row * cols_n + col] = wsrc[widx(oc, ic, sy, sx, in_c)];
                }
}

// One 3x3 same-padding convolution pass: out = packed_weights x im2col(in),
// plus optional bias. All conv/tconv forward and input-gradient passes are
// this routine with different packing flags.
template <typename T>
void conv3x3_apply(const Tensor4<T>& in, const std::vector<T>& packed, const T* bias, int out_c,
                   Tensor4<T>& out, std::vector<T>& cols_scratch) {
    const int h = in.h, w = in.w;
    const std::size_t plane = std::size_t(h) * w;
    cols_scratch.resize(std::size_t(in.c) * 9 * plane);

    out = Tensor4<T>(in.n, out_c, h, w);
    for (int i = 0; i < in.n; ++i) {
        im2col3x3(in.item(i), in.c, h, w, cols_scratch.data());
        T* dst = out.item(i);
        if (bias)
            for (int oc = 0; oc < out_c; ++oc)
                std::fill(dst + std::size_t(oc) * plane, dst + std::size_t(oc + 1) * plane,
                          bias[oc]);
        gemm_acc(packed.data(), cols_scratch.data(), dst, out_c, in.c * 9, int(plane));
    }
}

// dW for conv (flip=false) or tconv (flip=true), accumulated over the batch:
// acc[oc][(ic,ky,kx)] = sum over items and pixels of grad_out * im2col(in),
// then written back through the same kernel orientation the forward used.
template <typename T>
void conv3x3_wgrad(const Tensor4<T>& in, const Tensor4<T>& grad_out, bool flip,
                   std::vector<T>& dw, std::vector<T>& cols_scratch) {
    const int h = in.h, w = in.w;
    const std::size_t plane = std::size_t(h) * w;
    const int krows = in.c * 9;
    std::vector<T> acc(std::size_t(grad_out.c) * krows, T(0));
    cols_scratch.resize(std::size_t(krows) * plane);

    for (int i = 0; i < in.n; ++i) {
        im2col3x3(in.item(i), in.c, h, w, cols_scratch.data());
        const T* g = grad_out.item(i);
        for (int oc = 0; oc < grad_out.c; ++oc) {
            const T* grow = g + std::size_t(oc) * plane;
            T* arow = acc.data() + std::size_t(oc) * krows;
            for (int kr = 0; kr < krows; ++kr) {
                const T* crow = cols_scratch.data() + std::size_t(kr) * plane;
                T sum = T(0);
                for (std::size_t p = 0; p < plane; ++p) sum += grow[p] * crow[p];
                arow[kr] += sum;
            }
        }
    }

    const int in_c = in.c;
    dw.assign(acc.size(), T(0));
    for (int oc = 0; oc < grad_out.c; ++oc)
        for (int ic = 0; ic < in_c; ++ic)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                    const int sy = flip ? 2 - ky : ky;
                    const int sx = flip ? 2 - kx : kx;
                    dw[widx(oc, ic, sy, sx, in_c)] =
                        acc[(std::size_t(oc) * in_c + ic) * 9 + ky * 3 + kx];
                }
}

template <typename T>
void bias_grad(const Tensor4<T>& grad_out, std::vector<T>& db) {
    db.assign(grad_out.c, T(0));
    const std::size_t plane = std::size_t(grad_out.h) * grad_out.w;
    for (int i = 0; i < grad_out.n; ++i) {
        const T* g = grad_out.item(i);
        for (int oc = 0; oc < grad_out.c; ++oc) {
            T sum = T(0);
            const T* row = g + std::size_t(oc) * plane;
            for (std::size_t p = 0; p < plane; ++p) sum += row[p];
            db[oc] += sum;
        }
    }
}

template <typename T>
void maxpool2_forward(const Tensor4<T>& in, Tensor4<T>& out, std::vector<std::int32_t>& argmax) {
    if (in.h % 2 != 0 || in.w % 2 != 0)
        throw ShapeMismatch("maxpool2: spatial dims must be even");
    out = Tensor4<T>(in.n, in.c, in.h / 2, in.w / 2);
    argmax.resize(out.size());
    std::size_t o = 0;
    for (int i = 0; i < in.n; ++i)
        for (int c = 0; c < in.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x, ++o) {
                    T best = in.at(i, c, 2 * y, 2 * x);
                    int best_dy = 0, best_dx = 0;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const T v = in.at(i, c, 2 * y + dy, 2 * x + dx);
                            if (v > best) {
                                best = v;
                                best_dy = dy;
                                best_dx = dx;
                            }
                        }
                    out.data[o] = best;
                    argmax[o] = std::int32_t((2 * y + best_dy) * in.w + (2 * x + best_dx));
                }
}

template <typename T>
void maxpool2_backward(const Tensor4<T>& grad_out, const std::vector<std::int32_t>& argmax,
                       int in_h, int in_w, Tensor4<T>& grad_in) {
    grad_in = Tensor4<T>(grad_out.n, grad_out.c, in_h, in_w);
    const std::size_t in_plane = std::size_t(in_h) * in_w;
    std::size_t o = 0;
    for (int i = 0; i < grad_out.n; ++i)
        for (int c = 0; c < grad_out.c; ++c) {
            T* dst = grad_in.data.data() + (std::size_t(i) * grad_in.c + c) * in_plane;
            for (int y = 0; y < grad_out.h; ++y)
                for (int x = 0; x < grad_out.w; ++x, ++o) dst[argmax[o]] += grad_out.data[o];
        }
}

template <typename T>
void upsample2_forward(const Tensor4<T>& in, Tensor4<T>& out) {
    out = Tensor4<T>(in.n, in.c, in.h * 2, in.w * 2);
    for (int i = 0; i < in.n; ++i)
        for (int c = 0; c < in.c; ++c)
            for (int y = 0; y < out.h; ++y) {
                const T* srow = in.item(i) + (std::size_t(c) * in.h + y / 2) * in.w;
                T* drow = out.item(i) + (std::size_t(c) * out.h + y) * out.w;
                for (int x = 0; x < out.w; ++x) drow[x] = srow[x / 2];
            }
}

template <typename T>
void upsample2_backward(const Tensor4<T>& grad_out, Tensor4<T>& grad_in) {
    if (grad_out.h % 2 != 0 || grad_out.w % 2 != 0)
        throw ShapeMismatch("upsample2 backward: odd grad dims");
    grad_in = Tensor4<T>(grad_out.n, grad_out.c, grad_out.h / 2, grad_out.w / 2);
    for (int i = 0; i < grad_out.n; ++i)
        for (int c = 0; c < grad_out.c; ++c)
            for (int y = 0; y < grad_out.h; ++y) {
                const T* srow = grad_out.item(i) + (std::size_t(c) * grad_out.h + y) * grad_out.w;
                T* drow = grad_in.item(i) + (std::size_t(c) * grad_in.h + y / 2) * grad_in.w;
                for (int x = 0; x < grad_out.w; ++x) drow[x / 2] += srow[x];
            }
}

// dense: weights [units][d], bias [units]; batch items processed as gemv
template <typename T>
void dense_forward(const Tensor4<T>& in, const std::vector<T>& weights, const std::vector<T>& bias,
                   int units, Tensor4<T>& out) {
    const int d = int(in.item_size());
    out = Tensor4<T>(in.n, units, 1, 1);
    for (int i = 0; i < in.n; ++i) {
        const T* x = in.item(i);
        T* y = out.item(i);
        for (int u = 0; u < units; ++u) {
            const T* wrow = weights.data() + std::size_t(u) * d;
            T sum = bias[u];
            for (int j = 0; j < d; ++j) sum += wrow[j] * x[j];
            y[u] = sum;
        }
    }
}

template <typename T>
void dense_backward(const Tensor4<T>& in, const std::vector<T>& weights, int units,
                    const Tensor4<T>& grad_out, Tensor4<T>& grad_in, std::vector<T>& dw,
                    std::vector<T>& db) {
    const int d = int(in.item_size());
    grad_in = Tensor4<T>(in.n, in.c, in.h, in.w);
    dw.assign(std::size_t(units) * d, T(0));
    db.assign(units, T(0));
    for (int i = 0; i < in.n; ++i) {
        const T* x = in.item(i);
        const T* g = grad_out.item(i);
        T* gx = grad_in.item(i);
        for (int u = 0; u < units; ++u) {
            const T gu = g[u];
            db[u] += gu;
            const T* wrow = weights.data() + std::size_t(u) * d;
            T* dwrow = dw.data() + std::size_t(u) * d;
            for (int j = 0; j < d; ++j) {
                gx[j] += gu * wrow[j];
                dwrow[j] += gu * x[j];
            }
        }
    }
}

template <typename T>
void apply_activation(Activation act, Tensor4<T>& t) {
    switch (act) {
        case Activation::relu:
            for (T& v : t.data) v = v > T(0) ? v : T(0);
            break;
        case Activation::sigmoid:
            for (T& v : t.data) v = T(1) / (T(1) + std::exp(-v));
            break;
        case Activation::linear:
            break;
    }
}

// grad through the activation, using the post-activation output
template <typename T>
void activation_backward(Activation act, const Tensor4<T>& out, Tensor4<T>& grad) {
    switch (act) {
        case Activation::relu:
            for (std::size_t i = 0; i < grad.data.size(); ++i)
                if (out.data[i] <= T(0)) grad.data[i] = T(0);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < grad.data.size(); ++i)
                grad.data[i] *= out.data[i] * (T(1) - out.data[i]);
            break;
        case Activation::linear:
            break;
    }
}

} // namespace detail

} // namespace pardinus::nn
