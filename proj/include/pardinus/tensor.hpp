// ============================================================================
// tensor.hpp - 4-D batch tensor for the network engine
//
// Templated on the scalar type: the pipeline runs in float, gradient checks
// instantiate the same code in double.
// ============================================================================

#pragma once

#include <cstddef>
#include <vector>

#include "pardinus/common.hpp"
#include "pardinus/image.hpp"

namespace pardinus::nn {

struct Shape3 {
    int c = 0, h = 0, w = 0;
    bool operator==(const Shape3&) const = default;
    std::size_t count() const { return std::size_t(c) * h * w; }
};

template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data; // n-major, then channel, row, column

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_), data(std::size_t(n_) * c_ * h_ * w_, fill) {}
    Tensor4(int n_, Shape3 s, T fill = T(0)) : Tensor4(n_, s.c, s.h, s.w, fill) {}

    Shape3 shape3() const { return {c, h, w}; }
    std::size_t item_size() const { return std::size_t(c) * h * w; }
    std::size_t size() const { return data.size(); }

    T* item(int i) { return data.data() + std::size_t(i) * item_size(); }
    const T* item(int i) const { return data.data() + std::size_t(i) * item_size(); }

    T& at(int i, int ci, int y, int x) {
        return data[((std::size_t(i) * c + ci) * h + y) * w + x];
    }
    T at(int i, int ci, int y, int x) const {
        return data[((std::size_t(i) * c + ci) * h + y) * w + x];
    }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

// single image <-> batch-of-one conversions
inline Tensor4<float> to_tensor(const ImageTensor& img) {
    Tensor4<float> t(1, img.channels, img.height, img.width);
    t.data = img.data;
    return t;
}

inline Tensor4<float> to_batch(const std::vector<const ImageTensor*>& images) {
    if (images.empty()) throw EmptyInput("to_batch: no images");
    const ImageTensor& first = *images.front();
    Tensor4<float> t(int(images.size()), first.channels, first.height, first.width);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i]->same_shape(first)) throw ShapeMismatch("to_batch: ragged image shapes");
        std::copy(images[i]->data.begin(), images[i]->data.end(), t.item(int(i)));
    }
    return t;
}

inline ImageTensor to_image(const Tensor4<float>& t, int item = 0) {
    ImageTensor img(t.c, t.h, t.w);
    std::copy(t.item(item), t.item(item) + t.item_size(), img.data.begin());
    return img;
}

} // namespace pardinus::nn
