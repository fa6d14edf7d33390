// ============================================================================
// network.hpp - layer chain with forward/backward, Adam, and weight blobs
//
// A Network owns the layer specs, the shape algebra and a ParamStore. The
// forward pass records a trace (per-layer inputs plus pool argmaxes) that
// backward consumes; traces are revision-checked so a trace taken before a
// parameter update cannot be replayed after it.
// ============================================================================

#pragma once

#include <string>
#include <vector>

#include "pardinus/layers.hpp"

namespace pardinus::nn {

template <typename T>
struct LayerParams {
    std::vector<T> w;
    std::vector<T> b;
};

template <typename T>
struct AdamState {
    std::vector<T> mw, vw, mb, vb;
};

template <typename T>
struct ParamStore {
    std::vector<LayerParams<T>> layers; // empty entries for parameter-free layers
    std::vector<AdamState<T>> adam;
    long step = 0;
    std::uint64_t revision = 0;
};

template <typename T>
struct Gradients {
    std::vector<LayerParams<T>> layers; // dW/db, shapes mirror the ParamStore
    Tensor4<T> input;                   // dL/d(batch)
};

template <typename T>
struct ForwardTrace {
    std::vector<Tensor4<T>> inputs;                   // inputs[i] feeds layer i
    Tensor4<T> output;                                // final activation
    std::vector<std::vector<std::int32_t>> argmax;    // per maxpool layer
    std::uint64_t revision = 0;
};

template <typename T>
class Network {
public:
    Network() = default;

    Network(Shape3 input_shape, std::vector<LayerSpec> specs)
        : input_shape_(input_shape), specs_(std::move(specs)) {
        Shape3 s = input_shape_;
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            const LayerSpec& spec = specs_[i];
            if (spec.act == Activation::sigmoid && i + 1 != specs_.size())
                throw ShapeMismatch("network: sigmoid is reserved for the output layer");
            switch (spec.kind) {
                case LayerKind::conv2d:
                case LayerKind::tconv2d:
                    s = {spec.units, s.h, s.w};
                    break;
                case LayerKind::maxpool2:
                    if (s.h % 2 != 0 || s.w % 2 != 0)
                        throw ShapeMismatch("network: maxpool2 needs even spatial dims");
                    s = {s.c, s.h / 2, s.w / 2};
                    break;
                case LayerKind::upsample2:
                    s = {s.c, s.h * 2, s.w * 2};
                    break;
                case LayerKind::dense:
                    s = {spec.units, 1, 1};
                    break;
                case LayerKind::flatten:
                    s = {int(s.count()), 1, 1};
                    break;
                case LayerKind::reshape:
                    if (spec.target.count() != s.count())
                        throw ShapeMismatch("network: reshape changes element count");
                    s = spec.target;
                    break;
            }
            shapes_.push_back(s);
        }
        allocate_params();
    }

    const std::vector<LayerSpec>& specs() const { return specs_; }
    const std::vector<Shape3>& shapes() const { return shapes_; }
    Shape3 input_shape() const { return input_shape_; }
    Shape3 output_shape() const { return shapes_.empty() ? input_shape_ : shapes_.back(); }
    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }

    // He init for relu layers, Glorot uniform for sigmoid/linear, zero biases
    void init_params(std::uint64_t seed) {
        Rng rng(derive_seed(seed, "init"));
        Shape3 s = input_shape_;
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            const LayerSpec& spec = specs_[i];
            LayerParams<T>& p = params_.layers[i];
            if (!p.w.empty()) {
                std::size_t fan_in = 0, fan_out = 0;
                if (spec.kind == LayerKind::dense) {
                    fan_in = s.count();
                    fan_out = std::size_t(spec.units);
                } else {
                    fan_in = std::size_t(s.c) * 9;
                    fan_out = std::size_t(spec.units) * 9;
                }
                if (spec.act == Activation::relu) {
                    const double stddev = std::sqrt(2.0 / double(fan_in));
                    for (T& v : p.w) v = T(stddev * rng.normal());
                } else {
                    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
                    for (T& v : p.w) v = T(rng.uniform(-limit, limit));
                }
                std::fill(p.b.begin(), p.b.end(), T(0));
            }
            s = shapes_[i];
        }
        for (auto& a : params_.adam) {
            a.mw.clear();
            a.vw.clear();
            a.mb.clear();
            a.vb.clear();
        }
        params_.step = 0;
        ++params_.revision;
    }

    Tensor4<T> forward(const Tensor4<T>& batch, ForwardTrace<T>* trace = nullptr) const {
        if (batch.shape3() != input_shape_)
            throw ShapeMismatch("network forward: batch shape != input spec");
        if (trace) {
            trace->inputs.clear();
            trace->argmax.clear();
            trace->revision = params_.revision;
        }

        std::vector<T> scratch;
        std::vector<T> packed;
        Tensor4<T> cur = batch;
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            const LayerSpec& spec = specs_[i];
            if (trace) trace->inputs.push_back(cur);
            Tensor4<T> next;
            switch (spec.kind) {
                case LayerKind::conv2d:
                case LayerKind::tconv2d: {
                    const bool flip = spec.kind == LayerKind::tconv2d;
                    detail::pack_weights(params_.layers[i].w.data(), spec.units, cur.c, flip,
                                         false, packed);
                    detail::conv3x3_apply(cur, packed, params_.layers[i].b.data(), spec.units,
                                          next, scratch);
                    detail::apply_activation(spec.act, next);
                    break;
                }
                case LayerKind::maxpool2: {
                    std::vector<std::int32_t> argmax;
                    detail::maxpool2_forward(cur, next, argmax);
                    if (trace) trace->argmax.push_back(std::move(argmax));
                    break;
                }
                case LayerKind::upsample2:
                    detail::upsample2_forward(cur, next);
                    break;
                case LayerKind::dense:
                    detail::dense_forward(cur, params_.layers[i].w, params_.layers[i].b,
                                          spec.units, next);
                    detail::apply_activation(spec.act, next);
                    break;
                case LayerKind::flatten:
                case LayerKind::reshape: {
                    const Shape3 out = shapes_[i];
                    next = cur;
                    next.c = out.c;
                    next.h = out.h;
                    next.w = out.w;
                    break;
                }
            }
            cur = std::move(next);
        }
        if (trace) trace->output = cur;
        return cur;
    }

    Gradients<T> backward(const ForwardTrace<T>& trace, const Tensor4<T>& grad_output) const {
        if (trace.revision != params_.revision)
            throw StaleCache("network backward: trace predates a parameter update");
        if (trace.inputs.size() != specs_.size())
            throw StaleCache("network backward: trace does not match this network");
        if (!grad_output.same_shape(trace.output))
            throw ShapeMismatch("network backward: grad shape != output shape");

        Gradients<T> grads;
        grads.layers.resize(specs_.size());

        std::vector<T> scratch;
        std::vector<T> packed;
        Tensor4<T> grad = grad_output;
        std::size_t pool_i = trace.argmax.size();

        for (std::size_t ri = specs_.size(); ri-- > 0;) {
            const LayerSpec& spec = specs_[ri];
            const Tensor4<T>& input = trace.inputs[ri];
            const Tensor4<T>& output = ri + 1 < specs_.size() ? trace.inputs[ri + 1] : trace.output;
            Tensor4<T> grad_in;
            switch (spec.kind) {
                case LayerKind::conv2d:
                case LayerKind::tconv2d: {
                    const bool flip = spec.kind == LayerKind::tconv2d;
                    detail::activation_backward(spec.act, output, grad);
                    detail::conv3x3_wgrad(input, grad, flip, grads.layers[ri].w, scratch);
                    detail::bias_grad(grad, grads.layers[ri].b);
                    // input grad: channel-swapped weights, opposite flip
                    detail::pack_weights(params_.layers[ri].w.data(), spec.units, input.c, !flip,
                                         true, packed);
                    detail::conv3x3_apply(grad, packed, static_cast<const T*>(nullptr), input.c,
                                          grad_in, scratch);
                    break;
                }
                case LayerKind::maxpool2:
                    detail::maxpool2_backward(grad, trace.argmax[--pool_i], input.h, input.w,
                                              grad_in);
                    break;
                case LayerKind::upsample2:
                    detail::upsample2_backward(grad, grad_in);
                    break;
                case LayerKind::dense:
                    detail::activation_backward(spec.act, output, grad);
                    detail::dense_backward(input, params_.layers[ri].w, spec.units, grad, grad_in,
                                           grads.layers[ri].w, grads.layers[ri].b);
                    break;
                case LayerKind::flatten:
                case LayerKind::reshape:
                    grad_in = grad;
                    grad_in.c = input.c;
                    grad_in.h = input.h;
                    grad_in.w = input.w;
                    break;
            }
            grad = std::move(grad_in);
        }
        grads.input = std::move(grad);
        return grads;
    }

    // standard Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8
    void adam_step(const Gradients<T>& grads, T lr) {
        if (grads.layers.size() != params_.layers.size())
            throw ShapeMismatch("adam_step: gradient layout mismatch");
        const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        params_.step += 1;
        const double bc1 = 1.0 - std::pow(beta1, double(params_.step));
        const double bc2 = 1.0 - std::pow(beta2, double(params_.step));

        auto update = [&](std::vector<T>& theta, const std::vector<T>& g, std::vector<T>& m,
                          std::vector<T>& v) {
            if (theta.size() != g.size())
                throw ShapeMismatch("adam_step: gradient shape mismatch");
            for (std::size_t j = 0; j < theta.size(); ++j) {
                const double gj = double(g[j]);
                const double mj = beta1 * double(m[j]) + (1.0 - beta1) * gj;
                const double vj = beta2 * double(v[j]) + (1.0 - beta2) * gj * gj;
                m[j] = T(mj);
                v[j] = T(vj);
                theta[j] -= T(double(lr) * (mj / bc1) / (std::sqrt(vj / bc2) + eps));
            }
        };

        for (std::size_t i = 0; i < params_.layers.size(); ++i) {
            if (params_.layers[i].w.empty()) continue;
            AdamState<T>& a = params_.adam[i];
            if (a.mw.size() != params_.layers[i].w.size()) { // moments allocated on first step
                a.mw.assign(params_.layers[i].w.size(), T(0));
                a.vw.assign(params_.layers[i].w.size(), T(0));
                a.mb.assign(params_.layers[i].b.size(), T(0));
                a.vb.assign(params_.layers[i].b.size(), T(0));
            }
            update(params_.layers[i].w, grads.layers[i].w, a.mw, a.vw);
            update(params_.layers[i].b, grads.layers[i].b, a.mb, a.vb);
        }
        ++params_.revision;
    }

    // zero-valued gradient holder matching this network's parameter shapes
    Gradients<T> make_gradients() const {
        Gradients<T> g;
        g.layers.resize(params_.layers.size());
        for (std::size_t i = 0; i < params_.layers.size(); ++i) {
            g.layers[i].w.assign(params_.layers[i].w.size(), T(0));
            g.layers[i].b.assign(params_.layers[i].b.size(), T(0));
        }
        return g;
    }

private:
    void allocate_params() {
        params_.layers.resize(specs_.size());
        params_.adam.resize(specs_.size());
        Shape3 s = input_shape_;
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            const LayerSpec& spec = specs_[i];
            std::size_t w_count = 0, b_count = 0;
            if (spec.kind == LayerKind::conv2d || spec.kind == LayerKind::tconv2d) {
                w_count = std::size_t(spec.units) * s.c * 9;
                b_count = std::size_t(spec.units);
            } else if (spec.kind == LayerKind::dense) {
                w_count = std::size_t(spec.units) * s.count();
                b_count = std::size_t(spec.units);
            }
            params_.layers[i].w.assign(w_count, T(0));
            params_.layers[i].b.assign(b_count, T(0));
            s = shapes_[i];
        }
    }

    Shape3 input_shape_{};
    std::vector<LayerSpec> specs_;
    std::vector<Shape3> shapes_;
    ParamStore<T> params_;
};

// ----------------------------------------------------------------------------
// Weight serialization: little-endian 32-bit float blob plus a JSON-friendly
// index of (name, shape, offset) records, one per parameterized layer.
// ----------------------------------------------------------------------------

struct WeightIndexEntry {
    std::string name;            // e.g. "conv0.w", "conv0.b"
    std::vector<int> shape;
    std::size_t offset = 0;      // float offset into the blob
};

template <typename T>
std::vector<float> serialize_weights(const Network<T>& net, std::vector<WeightIndexEntry>& index) {
    index.clear();
    std::vector<float> blob;
    Shape3 s = net.input_shape();
    for (std::size_t i = 0; i < net.specs().size(); ++i) {
        const LayerSpec& spec = net.specs()[i];
        const LayerParams<T>& p = net.params().layers[i];
        if (!p.w.empty()) {
            const std::string base = std::string(to_string(spec.kind)) + std::to_string(i);
            std::vector<int> wshape = spec.kind == LayerKind::dense
                                          ? std::vector<int>{spec.units, int(s.count())}
                                          : std::vector<int>{spec.units, s.c, 3, 3};
            index.push_back({base + ".w", wshape, blob.size()});
            for (T v : p.w) blob.push_back(float(v));
            index.push_back({base + ".b", {spec.units}, blob.size()});
            for (T v : p.b) blob.push_back(float(v));
        }
        s = net.shapes()[i];
    }
    return blob;
}

template <typename T>
void deserialize_weights(Network<T>& net, const std::vector<float>& blob) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < net.specs().size(); ++i) {
        LayerParams<T>& p = net.params().layers[i];
        if (p.w.empty()) continue;
        if (off + p.w.size() + p.b.size() > blob.size())
            throw CorruptBundle("weight blob too short");
        for (std::size_t j = 0; j < p.w.size(); ++j) p.w[j] = T(blob[off + j]);
        off += p.w.size();
        for (std::size_t j = 0; j < p.b.size(); ++j) p.b[j] = T(blob[off + j]);
        off += p.b.size();
    }
    if (off != blob.size()) throw CorruptBundle("weight blob size mismatch");
    ++net.params().revision;
}

} // namespace pardinus::nn
